//! The eight conditional-intensity models and their parameters.

mod data;
mod params;
mod surface;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use data::{DataOptions, ModelData};
pub use params::ParamVector;
pub(crate) use surface::PreparedTerm;
pub use surface::{ConstantIntensity, FnIntensity, Intensity, IntensitySurface};

use crate::covariates::CurveVar;
use crate::error::{Error, Result};

/// Upper truncation of fuel age, years.
pub const DEFAULT_PSI: f64 = 22.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
}

/// Every named parameter any model can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Gamma,
    Alpha,
    MuBi,
    MuTemp,
    MuRh,
    MuWind,
    MuPrecip,
    Mu,
    MuFuel,
    BetaM,
    BetaT,
    BetaBi,
    BetaTemp,
    BetaRh,
    BetaWind,
    BetaPrecip,
    Beta,
    Psi,
}

impl Param {
    pub const ALL: [Param; 18] = [
        Param::Gamma,
        Param::Alpha,
        Param::MuBi,
        Param::MuTemp,
        Param::MuRh,
        Param::MuWind,
        Param::MuPrecip,
        Param::Mu,
        Param::MuFuel,
        Param::BetaM,
        Param::BetaT,
        Param::BetaBi,
        Param::BetaTemp,
        Param::BetaRh,
        Param::BetaWind,
        Param::BetaPrecip,
        Param::Beta,
        Param::Psi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Gamma => "gamma",
            Param::Alpha => "alpha",
            Param::MuBi => "mu_bi",
            Param::MuTemp => "mu_temp",
            Param::MuRh => "mu_rh",
            Param::MuWind => "mu_wind",
            Param::MuPrecip => "mu_precip",
            Param::Mu => "mu",
            Param::MuFuel => "mu_fuel",
            Param::BetaM => "beta_m",
            Param::BetaT => "beta_t",
            Param::BetaBi => "beta_bi",
            Param::BetaTemp => "beta_temp",
            Param::BetaRh => "beta_rh",
            Param::BetaWind => "beta_wind",
            Param::BetaPrecip => "beta_precip",
            Param::Beta => "beta",
            Param::Psi => "psi",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Linear weights multiply a term; the rest shape one.
    pub fn is_scale(self) -> bool {
        matches!(
            self,
            Param::Gamma
                | Param::Alpha
                | Param::MuBi
                | Param::MuTemp
                | Param::MuRh
                | Param::MuWind
                | Param::MuPrecip
                | Param::Mu
                | Param::MuFuel
        )
    }
}

/// Which covariate channel a term reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKind {
    BurningIndex,
    Additive(CurveVar),
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    Background,
    Seasonal,
    Channel {
        kind: ChannelKind,
        per_station: bool,
    },
    Fuel,
}

/// One additive piece `scale · φ(t, x, y; shape)` of an intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermSpec {
    pub kind: TermKind,
    pub scale: Param,
    pub shape: Param,
}

const fn term(kind: TermKind, scale: Param, shape: Param) -> TermSpec {
    TermSpec { kind, scale, shape }
}

fn additive(per_station: bool) -> [TermSpec; 4] {
    let ch = |v| TermKind::Channel {
        kind: ChannelKind::Additive(v),
        per_station,
    };
    [
        term(ch(CurveVar::Temperature), Param::MuTemp, Param::BetaTemp),
        term(ch(CurveVar::Humidity), Param::MuRh, Param::BetaRh),
        term(ch(CurveVar::Wind), Param::MuWind, Param::BetaWind),
        term(
            ch(CurveVar::Precipitation),
            Param::MuPrecip,
            Param::BetaPrecip,
        ),
    ]
}

fn product(per_station: bool) -> TermSpec {
    term(
        TermKind::Channel {
            kind: ChannelKind::Product,
            per_station,
        },
        Param::Mu,
        Param::Beta,
    )
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::M1,
        ModelId::M2,
        ModelId::M3,
        ModelId::M4,
        ModelId::M5,
        ModelId::M6,
        ModelId::M7,
        ModelId::M8,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn terms(self) -> Vec<TermSpec> {
        let mut t = vec![
            term(TermKind::Background, Param::Gamma, Param::BetaM),
            term(TermKind::Seasonal, Param::Alpha, Param::BetaT),
        ];
        match self {
            ModelId::M1 => {}
            ModelId::M2 => t.push(term(
                TermKind::Channel {
                    kind: ChannelKind::BurningIndex,
                    per_station: false,
                },
                Param::MuBi,
                Param::BetaBi,
            )),
            ModelId::M3 => t.extend(additive(false)),
            ModelId::M4 => t.push(product(false)),
            ModelId::M5 | ModelId::M7 => t.extend(additive(true)),
            ModelId::M6 | ModelId::M8 => t.push(product(true)),
        }
        if self.has_fuel() {
            t.push(term(TermKind::Fuel, Param::MuFuel, Param::Psi));
        }
        t
    }

    pub fn has_fuel(self) -> bool {
        matches!(self, ModelId::M7 | ModelId::M8)
    }

    /// Every parameter of the model in canonical order, `ψ` included for
    /// the fuel models.
    pub fn params(self) -> Vec<Param> {
        let terms = self.terms();
        let mut p: Vec<Param> = terms.iter().map(|t| t.scale).collect();
        p.extend(terms.iter().map(|t| t.shape));
        p
    }

    /// Free parameters; `ψ` counts only when it is fitted.
    pub fn param_count(self, psi_free: bool) -> usize {
        self.params().len() - usize::from(self.has_fuel() && !psi_free)
    }
}

/// Free-parameter count with `ψ` held fixed.
pub fn param_count(model: ModelId) -> usize {
    model.param_count(false)
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.number())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    /// Accepts `3`, `m3` or `M3`.
    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches(['m', 'M']);
        match digits.parse::<usize>() {
            Ok(k @ 1..=8) => Ok(ModelId::ALL[k - 1]),
            _ => Err(Error::Config(format!("unknown model `{s}`"))),
        }
    }
}
