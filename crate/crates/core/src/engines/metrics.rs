use crate::error::Error;
use crate::exactset::TransportResult;
use crate::Result;

/// Absolute deadband on power and heat signs for mode classification.
pub const DEADBAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    Engine,
    Fridge,
    Dud,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Engine => "engine",
            Mode::Fridge => "fridge",
            Mode::Dud => "dud",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EngineMetrics {
    /// P/Q̇_R while producing power.
    pub efficiency: Option<f64>,
    /// Q̇_L/(−P) while cooling the cold (left) lead.
    pub cop: Option<f64>,
    pub entropy_production: f64,
    pub mode: Mode,
}

pub fn carnot_efficiency(temp_left: f64, temp_right: f64) -> f64 {
    1.0 - temp_left / temp_right
}

pub fn carnot_cop(temp_left: f64, temp_right: f64) -> f64 {
    temp_left / (temp_right - temp_left)
}

/// Classifies a steady state with the left lead colder than the right.
pub fn engine_metrics(t: &TransportResult, temp_left: f64, temp_right: f64) -> Result<EngineMetrics> {
    if !(temp_left > 0.0 && temp_right > temp_left) {
        return Err(Error::invalid("need 0 < T_L < T_R"));
    }
    let entropy_production = -t.heat_left / temp_left - t.heat_right / temp_right;
    let (mode, efficiency, cop) = if t.power > DEADBAND && t.heat_right > DEADBAND {
        (Mode::Engine, Some(t.power / t.heat_right), None)
    } else if t.heat_left > DEADBAND && t.power < -DEADBAND {
        (Mode::Fridge, None, Some(t.heat_left / -t.power))
    } else {
        (Mode::Dud, None, None)
    };
    Ok(EngineMetrics { efficiency, cop, entropy_production, mode })
}
