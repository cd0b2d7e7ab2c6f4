use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CalmWaterCurve, ShipParticulars};
use crate::report::StageEntry;
use crate::tables::{ShipType, KNOT};

use super::{parse_f64, parse_key_values, parse_pairs, read_text};

/// Default trip thresholds: 10 rpm and 3 knots.
pub const DEFAULT_RPM_THRESHOLD: f64 = 10.0;
pub const DEFAULT_SOG_THRESHOLD: f64 = 3.0 * KNOT;

pub fn load_particulars(path: impl AsRef<Path>) -> Result<(ShipParticulars, StageEntry)> {
    let path = path.as_ref();
    parse_particulars(path, &read_text(path)?)
}

/// Keys: `ship_type`, `lwl`, `lpp`, `beam`, `design_draft`,
/// `block_coefficient`, `anemometer_height`, `wind_reference_height`,
/// `rpm_threshold`, `sog_threshold` (m/s) or `sog_threshold_knots`,
/// `curve.<label> = speed:power, ...` (m/s, W) and
/// `envelope = rpm:power, ...`.
pub fn parse_particulars(path: &Path, text: &str) -> Result<(ShipParticulars, StageEntry)> {
    let mut entry = StageEntry::new("particulars");
    let mut ship_type = None;
    let (mut lwl, mut lpp, mut beam, mut design_draft, mut cb) = (None, None, None, None, None);
    let (mut z_a, mut z_ref) = (None, None);
    let mut rpm_threshold = DEFAULT_RPM_THRESHOLD;
    let mut sog_threshold = DEFAULT_SOG_THRESHOLD;
    let mut curves = Vec::new();
    let mut envelope = None;

    for (line, key, value) in parse_key_values(path, text)? {
        let num = || parse_f64(path, line, &key, &value);
        match key.as_str() {
            "ship_type" | "type" => ship_type = Some(value.parse::<ShipType>()?),
            "lwl" => lwl = Some(num()?),
            "lpp" => lpp = Some(num()?),
            "beam" => beam = Some(num()?),
            "design_draft" => design_draft = Some(num()?),
            "block_coefficient" | "cb" => cb = Some(num()?),
            "anemometer_height" => z_a = Some(num()?),
            "wind_reference_height" => z_ref = Some(num()?),
            "rpm_threshold" => rpm_threshold = num()?,
            "sog_threshold" => sog_threshold = num()?,
            "sog_threshold_knots" => sog_threshold = num()? * KNOT,
            "envelope" => envelope = Some(parse_pairs(path, line, &value)?),
            k if k.starts_with("curve.") => {
                let mut points = parse_pairs(path, line, &value)?;
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                curves.push(CalmWaterCurve {
                    label: k["curve.".len()..].to_string(),
                    points,
                });
            }
            other => entry.warn(format!("line {line}: unknown key `{other}` ignored")),
        }
    }

    let required = |name: &str| Error::InvalidInput(format!("particulars: missing mandatory field `{name}`"));
    let ship_type = ship_type.ok_or_else(|| required("ship_type"))?;
    let beam = beam.ok_or_else(|| required("beam"))?;
    let design_draft = design_draft.ok_or_else(|| required("design_draft"))?;
    if lwl.is_none() && lpp.is_none() {
        return Err(required("lwl or lpp"));
    }
    let filled = cb.is_none();
    let block_coefficient = cb.unwrap_or_else(|| ship_type.typical_block_coefficient());
    if filled {
        entry.correction(format!(
            "block_coefficient filled with typical value {block_coefficient} for {ship_type}"
        ));
    }
    let p = ShipParticulars {
        ship_type,
        lwl,
        lpp,
        beam,
        design_draft,
        block_coefficient,
        block_coefficient_filled: filled,
        anemometer_height: z_a,
        wind_reference_height: z_ref,
        calm_water_curves: curves,
        envelope,
        rpm_threshold,
        sog_threshold,
    };
    p.validate()?;
    Ok((p, entry))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(ShipParticulars, StageEntry)> {
        parse_particulars(Path::new("ship.txt"), text)
    }

    #[test]
    fn block_coefficient_filled_from_type() {
        let (p, entry) = parse("ship_type = crude_oil_carrier\nlpp = 320\nbeam = 58\ndesign_draft = 20\n").unwrap();
        assert!((p.block_coefficient - 0.805).abs() < 1e-12);
        assert!(p.block_coefficient_filled);
        assert_eq!(entry.corrections.len(), 1);
    }

    #[test]
    fn explicit_block_coefficient_kept() {
        let (p, entry) = parse("ship_type = ferry\nlwl = 120\nbeam = 20\ndesign_draft = 5\nblock_coefficient = 0.6\n").unwrap();
        assert_eq!(p.block_coefficient, 0.6);
        assert!(entry.corrections.is_empty());
    }

    #[test]
    fn negative_draft_rejected() {
        assert!(parse("ship_type = ferry\nlwl = 120\nbeam = 20\ndesign_draft = -5\n").is_err());
    }

    #[test]
    fn unknown_type_lists_choices() {
        let err = parse("ship_type = yacht\nlwl = 20\nbeam = 5\ndesign_draft = 2\n").unwrap_err();
        assert!(err.to_string().contains("ferry"));
    }

    #[test]
    fn curves_and_envelope() {
        let (p, _) = parse(
            "ship_type = bulk_carrier\nlwl = 200\nbeam = 32\ndesign_draft = 12\n\
             curve.sea_trial = 6:2e6, 5:1e6\nenvelope = 0:0, 100:0, 100:1e7, 0:1e7\n",
        )
        .unwrap();
        assert_eq!(p.calm_water_curves[0].points, vec![(5.0, 1e6), (6.0, 2e6)]);
        assert_eq!(p.envelope.as_ref().unwrap().len(), 4);
        assert_eq!(p.sog_threshold, DEFAULT_SOG_THRESHOLD);
    }
}
