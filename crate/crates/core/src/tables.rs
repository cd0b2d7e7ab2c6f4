//! Reference tables by ship type: typical service speed, block coefficient
//! at design draft, average draft ratio, and the wetted-surface formula
//! family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact knot in m/s (1852 m / 3600 s).
pub const KNOT: f64 = 1852.0 / 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShipType {
    CrudeOilCarrier,
    GasTanker,
    ProductTanker,
    ChemicalTanker,
    OreCarrier,
    BulkCarrier,
    ContainerLine,
    ContainerFeeder,
    GeneralCargo,
    Coaster,
    RoRoCargo,
    RoPax,
    CruiseShip,
    Ferry,
}

impl ShipType {
    pub const ALL: [ShipType; 14] = [
        ShipType::CrudeOilCarrier,
        ShipType::GasTanker,
        ShipType::ProductTanker,
        ShipType::ChemicalTanker,
        ShipType::OreCarrier,
        ShipType::BulkCarrier,
        ShipType::ContainerLine,
        ShipType::ContainerFeeder,
        ShipType::GeneralCargo,
        ShipType::Coaster,
        ShipType::RoRoCargo,
        ShipType::RoPax,
        ShipType::CruiseShip,
        ShipType::Ferry,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ShipType::CrudeOilCarrier => "crude_oil_carrier",
            ShipType::GasTanker => "gas_tanker",
            ShipType::ProductTanker => "product_tanker",
            ShipType::ChemicalTanker => "chemical_tanker",
            ShipType::OreCarrier => "ore_carrier",
            ShipType::BulkCarrier => "bulk_carrier",
            ShipType::ContainerLine => "container_line",
            ShipType::ContainerFeeder => "container_feeder",
            ShipType::GeneralCargo => "general_cargo",
            ShipType::Coaster => "coaster",
            ShipType::RoRoCargo => "roro_cargo",
            ShipType::RoPax => "ropax",
            ShipType::CruiseShip => "cruise_ship",
            ShipType::Ferry => "ferry",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            ShipType::CrudeOilCarrier => &["crude_oil_tanker", "oil_tanker", "crude"],
            ShipType::GasTanker => &["lng_carrier", "lng", "gas_carrier", "liquefied_gas_tanker"],
            ShipType::ProductTanker => &["product"],
            ShipType::ChemicalTanker => &["chemical"],
            ShipType::OreCarrier => &["ore"],
            ShipType::BulkCarrier => &["bulk", "regular_bulk"],
            ShipType::ContainerLine => &["container", "line_carrier"],
            ShipType::ContainerFeeder => &["feeder"],
            ShipType::GeneralCargo => &["general"],
            ShipType::Coaster => &[],
            ShipType::RoRoCargo => &["roro", "ro_ro"],
            ShipType::RoPax => &["ro_pax", "ferry_ropax", "ferry_ro_pax"],
            ShipType::CruiseShip => &["cruise"],
            ShipType::Ferry => &["ferry_pax", "pax_ferry"],
        }
    }

    pub fn wsa_formula(self) -> WsaFormula {
        match self {
            ShipType::CrudeOilCarrier
            | ShipType::GasTanker
            | ShipType::ProductTanker
            | ShipType::ChemicalTanker
            | ShipType::OreCarrier
            | ShipType::BulkCarrier => WsaFormula::TankerBulk,
            ShipType::ContainerLine | ShipType::ContainerFeeder => WsaFormula::Container,
            _ => WsaFormula::General,
        }
    }

    /// Service speed interval in m/s.
    pub fn service_speed_range(self) -> (f64, f64) {
        let row = SERVICE_SPEED_KNOTS
            .iter()
            .find(|r| r.types.contains(&self))
            .expect("every ship type has a service speed row");
        (row.min * KNOT, row.max * KNOT)
    }

    /// Midpoint of the typical block-coefficient range.
    pub fn typical_block_coefficient(self) -> f64 {
        let row = self.block_coefficient_row();
        0.5 * (row.min + row.max)
    }

    pub fn block_coefficient_row(self) -> &'static RangeRow {
        BLOCK_COEFFICIENT
            .iter()
            .find(|r| r.types.contains(&self))
            .expect("every ship type has a block coefficient row")
    }

    pub fn draft_ratio_row(self) -> &'static DraftRatioRow {
        DRAFT_RATIO
            .iter()
            .find(|r| r.types.contains(&self))
            .expect("every ship type has a draft ratio row")
    }
}

impl fmt::Display for ShipType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ShipType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        ShipType::ALL
            .into_iter()
            .find(|t| t.key() == norm || t.aliases().contains(&norm.as_str()))
            .ok_or_else(|| Error::UnknownShipType {
                given: s.trim().to_string(),
                accepted: ShipType::ALL.map(|t| t.key()).join(", "),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsaFormula {
    /// 0.99 (V/T + 1.9 L_WL T)
    TankerBulk,
    /// 0.995 (V/T + 1.9 L_WL T)
    Container,
    /// 1.025 (V/T + 1.7 L_PP T)
    General,
}

impl WsaFormula {
    /// (leading factor, length coefficient)
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            WsaFormula::TankerBulk => (0.99, 1.9),
            WsaFormula::Container => (0.995, 1.9),
            WsaFormula::General => (1.025, 1.7),
        }
    }

    pub fn wetted_surface(self, volume: f64, draft: f64, length: f64) -> f64 {
        let (factor, c) = self.coefficients();
        factor * (volume / draft + c * length * draft)
    }
}

#[derive(Debug)]
pub struct RangeRow {
    pub category: &'static str,
    pub label: &'static str,
    pub min: f64,
    pub max: f64,
    pub types: &'static [ShipType],
}

#[derive(Debug)]
pub struct DraftRatioRow {
    pub label: &'static str,
    /// `None` for types without ballast-only voyages.
    pub ballast: Option<f64>,
    pub laden: f64,
    pub types: &'static [ShipType],
}

use ShipType::*;

/// Typical service speed (knots).
pub static SERVICE_SPEED_KNOTS: [RangeRow; 13] = [
    RangeRow { category: "Tanker", label: "Crude oil carrier", min: 13.0, max: 17.0, types: &[CrudeOilCarrier] },
    RangeRow { category: "Tanker", label: "Gas tanker/LNG carrier", min: 16.0, max: 20.0, types: &[GasTanker] },
    RangeRow { category: "Tanker", label: "Product", min: 13.0, max: 16.0, types: &[ProductTanker] },
    RangeRow { category: "Tanker", label: "Chemical", min: 15.0, max: 18.0, types: &[ChemicalTanker] },
    RangeRow { category: "Bulk carrier", label: "Ore carrier", min: 14.0, max: 15.0, types: &[OreCarrier] },
    RangeRow { category: "Bulk carrier", label: "Regular", min: 12.0, max: 15.0, types: &[BulkCarrier] },
    RangeRow { category: "Container", label: "Line carrier", min: 20.0, max: 23.0, types: &[ContainerLine] },
    RangeRow { category: "Container", label: "Feeder", min: 18.0, max: 21.0, types: &[ContainerFeeder] },
    RangeRow { category: "General cargo", label: "General cargo", min: 14.0, max: 20.0, types: &[GeneralCargo] },
    RangeRow { category: "General cargo", label: "Coaster", min: 13.0, max: 16.0, types: &[Coaster] },
    RangeRow { category: "Roll-on/roll-off cargo", label: "Ro-Ro/Ro-Pax", min: 18.0, max: 23.0, types: &[RoRoCargo, RoPax] },
    RangeRow { category: "Passenger ship", label: "Cruise ship", min: 20.0, max: 23.0, types: &[CruiseShip] },
    RangeRow { category: "Passenger ship", label: "Ferry", min: 16.0, max: 23.0, types: &[Ferry] },
];

/// Typical block coefficient at design draft.
pub static BLOCK_COEFFICIENT: [RangeRow; 13] = [
    RangeRow { category: "Tanker", label: "Crude oil carrier", min: 0.78, max: 0.83, types: &[CrudeOilCarrier] },
    RangeRow { category: "Tanker", label: "Gas tanker/LNG carrier", min: 0.65, max: 0.75, types: &[GasTanker] },
    RangeRow { category: "Tanker", label: "Product", min: 0.75, max: 0.80, types: &[ProductTanker] },
    RangeRow { category: "Tanker", label: "Chemical", min: 0.70, max: 0.78, types: &[ChemicalTanker] },
    RangeRow { category: "Bulk carrier", label: "Ore carrier", min: 0.80, max: 0.85, types: &[OreCarrier] },
    RangeRow { category: "Bulk carrier", label: "Regular", min: 0.75, max: 0.85, types: &[BulkCarrier] },
    RangeRow { category: "Container", label: "Line carrier", min: 0.62, max: 0.72, types: &[ContainerLine] },
    RangeRow { category: "Container", label: "Feeder", min: 0.60, max: 0.70, types: &[ContainerFeeder] },
    RangeRow { category: "General cargo", label: "General cargo/Coaster", min: 0.70, max: 0.85, types: &[GeneralCargo, Coaster] },
    RangeRow { category: "Roll-on/roll-off cargo", label: "Ro-Ro cargo", min: 0.55, max: 0.70, types: &[RoRoCargo] },
    RangeRow { category: "Roll-on/roll-off cargo", label: "Ro-pax", min: 0.50, max: 0.70, types: &[RoPax] },
    RangeRow { category: "Passenger ship", label: "Cruise ship", min: 0.60, max: 0.70, types: &[CruiseShip] },
    RangeRow { category: "Passenger ship", label: "Ferry", min: 0.50, max: 0.70, types: &[Ferry] },
];

/// Average draft ratio T_c / T_d.
pub static DRAFT_RATIO: [DraftRatioRow; 10] = [
    DraftRatioRow { label: "Liquefied gas tanker", ballast: Some(0.67), laden: 0.89, types: &[GasTanker] },
    DraftRatioRow { label: "Chemical tanker", ballast: Some(0.66), laden: 0.88, types: &[ChemicalTanker] },
    DraftRatioRow { label: "Oil tanker", ballast: Some(0.60), laden: 0.89, types: &[CrudeOilCarrier, ProductTanker] },
    DraftRatioRow { label: "Bulk carrier", ballast: Some(0.58), laden: 0.91, types: &[OreCarrier, BulkCarrier] },
    DraftRatioRow { label: "General cargo", ballast: Some(0.65), laden: 0.89, types: &[GeneralCargo, Coaster] },
    DraftRatioRow { label: "Container", ballast: None, laden: 0.82, types: &[ContainerLine, ContainerFeeder] },
    DraftRatioRow { label: "Ro-Ro", ballast: None, laden: 0.87, types: &[RoRoCargo] },
    DraftRatioRow { label: "Cruise", ballast: None, laden: 0.98, types: &[CruiseShip] },
    DraftRatioRow { label: "Ferry pax", ballast: None, laden: 0.90, types: &[Ferry] },
    DraftRatioRow { label: "Ferry ro-pax", ballast: None, laden: 0.93, types: &[RoPax] },
];

/// Service speed interval in m/s for a ship type.
pub fn service_speed_range(ship_type: ShipType) -> (f64, f64) {
    ship_type.service_speed_range()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_type_resolves_in_every_table() {
        for t in ShipType::ALL {
            let _ = t.service_speed_range();
            let _ = t.block_coefficient_row();
            let _ = t.draft_ratio_row();
            assert_eq!(t.key().parse::<ShipType>().unwrap(), t);
        }
    }

    #[test]
    fn unknown_type_lists_accepted() {
        let err = "submarine".parse::<ShipType>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("submarine") && msg.contains("crude_oil_carrier"));
    }

    #[test]
    fn crude_midpoint() {
        assert!((ShipType::CrudeOilCarrier.typical_block_coefficient() - 0.805).abs() < 1e-12);
    }

    #[test]
    fn crude_service_speed() {
        let (lo, hi) = service_speed_range(ShipType::CrudeOilCarrier);
        assert!((lo - 6.688).abs() < 1e-3, "{lo}");
        assert!((hi - 8.746).abs() < 1e-3, "{hi}");
    }
}
