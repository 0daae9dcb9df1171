use super::{ModelId, Param, DEFAULT_PSI};
use crate::error::{Error, Result};

/// Values for every parameter of one model, in [`ModelId::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    model: ModelId,
    values: Vec<f64>,
    psi_free: bool,
}

impl ParamVector {
    /// `ψ` may be omitted and defaults to 22 years; every other parameter of
    /// the model must be given, and no others.
    pub fn new(model: ModelId, entries: &[(Param, f64)]) -> Result<Self> {
        for (p, _) in entries {
            if !model.params().contains(p) {
                return Err(Error::Config(format!(
                    "parameter `{}` does not belong to model {model}",
                    p.name()
                )));
            }
        }
        let values = model
            .params()
            .into_iter()
            .map(|p| match entries.iter().find(|(q, _)| *q == p) {
                Some(&(_, v)) => Ok(v),
                None if p == Param::Psi => Ok(DEFAULT_PSI),
                None => Err(Error::Config(format!(
                    "model {model} needs parameter `{}`",
                    p.name()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let pv = Self {
            model,
            values,
            psi_free: false,
        };
        pv.validate()?;
        Ok(pv)
    }

    pub fn from_fn(model: ModelId, f: impl Fn(Param) -> f64) -> Result<Self> {
        let entries: Vec<(Param, f64)> = model.params().into_iter().map(|p| (p, f(p))).collect();
        Self::new(model, &entries)
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn psi_free(&self) -> bool {
        self.psi_free
    }

    pub fn with_psi_free(mut self, free: bool) -> Self {
        self.psi_free = free && self.model.has_fuel();
        self
    }

    fn index(&self, p: Param) -> Option<usize> {
        self.model.params().iter().position(|&q| q == p)
    }

    pub fn get(&self, p: Param) -> Option<f64> {
        self.index(p).map(|i| self.values[i])
    }

    /// Value of a parameter the model is known to carry.
    pub fn value(&self, p: Param) -> f64 {
        self.get(p)
            .unwrap_or_else(|| panic!("model {} has no `{}`", self.model, p.name()))
    }

    pub fn set(&mut self, p: Param, v: f64) -> Result<()> {
        let i = self
            .index(p)
            .ok_or_else(|| Error::Config(format!("model {} has no `{}`", self.model, p.name())))?;
        check(p, v)?;
        self.values[i] = v;
        Ok(())
    }

    pub fn entries(&self) -> Vec<(Param, f64)> {
        self.model
            .params()
            .into_iter()
            .zip(self.values.iter().copied())
            .collect()
    }

    /// Parameters seen by the optimizer.
    pub fn free_params(&self) -> Vec<Param> {
        self.model
            .params()
            .into_iter()
            .filter(|&p| p != Param::Psi || self.psi_free)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (p, v) in self.entries() {
            check(p, v)?;
        }
        Ok(())
    }

    /// Log coordinates of the free parameters.
    pub fn pack(&self) -> Result<Vec<f64>> {
        self.free_params()
            .into_iter()
            .map(|p| {
                let v = self.value(p);
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::invalid(
                        p.name(),
                        v,
                        "must be positive to enter log coordinates",
                    ))
                }
            })
            .collect()
    }

    /// Inverse of [`pack`](Self::pack); fixed parameters keep their values.
    pub fn unpack(&self, coords: &[f64]) -> Result<Self> {
        let free = self.free_params();
        if coords.len() != free.len() {
            return Err(Error::Config(format!(
                "expected {} coordinates, got {}",
                free.len(),
                coords.len()
            )));
        }
        let mut out = self.clone();
        for (p, &u) in free.into_iter().zip(coords) {
            let v = u.exp();
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    p.name(),
                    v,
                    "coordinate leaves the representable range",
                ));
            }
            let i = out.index(p).expect("free parameter belongs to model");
            out.values[i] = v;
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> toml::Table {
        self.entries()
            .into_iter()
            .map(|(p, v)| (p.name().to_string(), toml::Value::Float(v)))
            .collect()
    }

    pub fn from_toml(model: ModelId, table: &toml::Table) -> Result<Self> {
        let entries = table
            .iter()
            .map(|(k, v)| {
                let p = Param::from_name(k)
                    .ok_or_else(|| Error::Config(format!("unknown parameter `{k}`")))?;
                let x = v
                    .as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| Error::Config(format!("parameter `{k}` must be a number")))?;
                Ok((p, x))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, &entries)
    }
}

fn check(p: Param, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(p.name(), v, "must be finite"));
    }
    if p.is_scale() && v < 0.0 {
        return Err(Error::invalid(p.name(), v, "weights must be nonnegative"));
    }
    if !p.is_scale() && v <= 0.0 {
        return Err(Error::invalid(p.name(), v, "bandwidths must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn m1(gamma: f64) -> Result<ParamVector> {
        ParamVector::new(
            ModelId::M1,
            &[
                (Param::Gamma, gamma),
                (Param::Alpha, 0.01),
                (Param::BetaM, 2.0),
                (Param::BetaT, 20.0),
            ],
        )
    }

    #[test]
    fn gamma_log_coordinate() {
        let p = m1(24e-3).unwrap();
        let c = p.pack().unwrap();
        assert_relative_eq!(c[0], 0.024f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(
            p.unpack(&c).unwrap().value(Param::Gamma),
            0.024,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_bandwidth_rejected() {
        let e = ParamVector::new(
            ModelId::M1,
            &[
                (Param::Gamma, 0.1),
                (Param::Alpha, 0.01),
                (Param::BetaM, 0.0),
                (Param::BetaT, 20.0),
            ],
        );
        assert!(e.is_err());
        let mut p = m1(0.1).unwrap();
        assert!(p.set(Param::BetaT, 0.0).is_err());
        p.set(Param::Gamma, 0.0).unwrap();
        assert!(p.pack().is_err());
    }

    #[test]
    fn missing_and_foreign_params() {
        assert!(ParamVector::new(ModelId::M1, &[(Param::Gamma, 1.0)]).is_err());
        let mut e = m1(0.1).unwrap().entries();
        e.push((Param::Mu, 1.0));
        assert!(ParamVector::new(ModelId::M1, &e).is_err());
    }

    #[test]
    fn psi_defaults_and_frees() {
        let p = ParamVector::from_fn(ModelId::M8, |q| if q == Param::Psi { 99.0 } else { 1.0 })
            .unwrap();
        assert_eq!(p.value(Param::Psi), 99.0);
        assert_eq!(p.pack().unwrap().len(), 7);
        let p = p.with_psi_free(true);
        assert_eq!(p.pack().unwrap().len(), 8);
        let q = ParamVector::new(ModelId::M8, &p.entries()[..7]).unwrap();
        assert_eq!(q.value(Param::Psi), DEFAULT_PSI);
    }

    #[test]
    fn toml_round_trip() {
        let p = ParamVector::from_fn(ModelId::M7, |q| 0.5 + q as u8 as f64).unwrap();
        let text = toml::to_string(&p.to_toml()).unwrap();
        let back: toml::Table = toml::from_str(&text).unwrap();
        assert_eq!(ParamVector::from_toml(ModelId::M7, &back).unwrap(), p);
    }

    proptest! {
        #[test]
        fn pack_unpack_identity(vals in prop::collection::vec(1e-6f64..1e4, 13)) {
            let p = ParamVector::from_fn(ModelId::M7, |q| vals[q as usize % 13]).unwrap();
            let back = p.unpack(&p.pack().unwrap()).unwrap();
            for ((_, a), (_, b)) in p.entries().into_iter().zip(back.entries()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }
}
