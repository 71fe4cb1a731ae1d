//! Declarative JSON problem and map descriptions for the CLI.
//!
//! A problem is either a named preset or an explicit coefficient quadruple.
//! Piece coefficients are given in the piece-local variable `t = x - left`
//! in ascending order, which round-trips exactly. Unknown keys are
//! rejected.

use crate::coefficients::{CoefficientSet, PiecewiseCoefficient};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::spectral::BoundaryCondition;
use crate::transforms::{GaugeSpec, ImpedanceSpec, LiouvilleMap};
use serde::{Deserialize, Serialize};

/// Piecewise polynomial: `pieces[i]` lives on
/// `[breakpoints[i], breakpoints[i+1])` with coefficients in `x - breakpoints[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl PiecewiseSpec {
    pub fn to_coefficient(&self) -> Result<PiecewiseCoefficient> {
        let pieces = self
            .pieces
            .iter()
            .map(|c| Polynomial::new(c.clone()))
            .collect();
        PiecewiseCoefficient::new(self.breakpoints.clone(), pieces)
    }

    pub fn from_coefficient(c: &PiecewiseCoefficient) -> Self {
        PiecewiseSpec {
            breakpoints: c.breakpoints().to_vec(),
            pieces: (0..c.num_pieces())
                .map(|i| c.piece(i).coeffs().to_vec())
                .collect(),
        }
    }
}

/// A full problem: coefficients plus boundary angles.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Named preset ("free", "step_s", "impedance_linear"); mutually
    /// exclusive with the explicit fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PiecewiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PiecewiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<PiecewiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<PiecewiseSpec>,
    /// Boundary angle at the left endpoint, in `[0, pi)`; 0 is Dirichlet.
    #[serde(default)]
    pub phi_a: f64,
    /// Boundary angle at the right endpoint.
    #[serde(default)]
    pub phi_b: f64,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "free" | "step_s" | "impedance_linear" => Ok(ProblemConfig {
                preset: Some(name.to_string()),
                ..Default::default()
            }),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }

    pub fn from_parts(
        c: &CoefficientSet,
        phi_a: BoundaryCondition,
        phi_b: BoundaryCondition,
    ) -> Self {
        ProblemConfig {
            preset: None,
            p: Some(PiecewiseSpec::from_coefficient(c.p())),
            q: Some(PiecewiseSpec::from_coefficient(c.q())),
            r: Some(PiecewiseSpec::from_coefficient(c.r())),
            s: Some(PiecewiseSpec::from_coefficient(c.s())),
            phi_a: phi_a.angle(),
            phi_b: phi_b.angle(),
        }
    }

    pub fn build(&self) -> Result<(CoefficientSet, BoundaryCondition, BoundaryCondition)> {
        let phi_a =
            BoundaryCondition::new(self.phi_a).map_err(|e| Error::Config(format!("phi_a: {e}")))?;
        let phi_b =
            BoundaryCondition::new(self.phi_b).map_err(|e| Error::Config(format!("phi_b: {e}")))?;
        if let Some(name) = &self.preset {
            if self.p.is_some() || self.q.is_some() || self.r.is_some() || self.s.is_some() {
                return Err(Error::Config(
                    "preset and explicit coefficients are mutually exclusive".into(),
                ));
            }
            let pi = std::f64::consts::PI;
            let c = match name.as_str() {
                "free" => CoefficientSet::free(0.0, pi),
                "step_s" => CoefficientSet::schroedinger(
                    PiecewiseCoefficient::constant(0.0, pi, 0.0),
                    PiecewiseCoefficient::step(0.0, pi / 2.0, pi, 0.0, 1.0),
                )?,
                "impedance_linear" => {
                    CoefficientSet::impedance(PiecewiseCoefficient::from_global(
                        vec![0.0, 1.0],
                        vec![Polynomial::new(vec![1.0, 2.0, 1.0])],
                    )?)?
                }
                other => return Err(Error::Config(format!("unknown preset '{other}'"))),
            };
            return Ok((c, phi_a, phi_b));
        }
        let take = |field: &Option<PiecewiseSpec>, name: &str| -> Result<PiecewiseCoefficient> {
            field
                .as_ref()
                .ok_or_else(|| Error::Config(format!("missing coefficient '{name}'")))?
                .to_coefficient()
        };
        let c = CoefficientSet::new(
            take(&self.p, "p")?,
            take(&self.q, "q")?,
            take(&self.r, "r")?,
            take(&self.s, "s")?,
        )?;
        let report = c.validate();
        if !report.is_ok() {
            return Err(Error::Config(format!(
                "coefficients violate the hypotheses: {}",
                report
                    .violations
                    .iter()
                    .map(|v| v.message.clone())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        Ok((c, phi_a, phi_b))
    }
}

/// Transform description: exactly one of the three variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liouville: Option<LiouvilleSpecConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impedance: Option<ImpedanceConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleSpecConfig {
    pub eta: PiecewiseSpec,
    pub kappa: PiecewiseSpec,
    pub nu: PiecewiseSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    #[serde(default)]
    pub eta0: f64,
    pub nu: PiecewiseSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceConfig {
    #[serde(default)]
    pub eta0: f64,
    pub nu0: f64,
    pub kappa0: f64,
    pub base: f64,
}

/// Resolved transform ready to apply.
pub enum ResolvedMap {
    Liouville(LiouvilleMap),
    Gauge(GaugeSpec),
    Impedance(ImpedanceSpec),
}

impl MapConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedMap> {
        let given = [
            self.liouville.is_some(),
            self.gauge.is_some(),
            self.impedance.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            return Err(Error::Config(
                "map config needs exactly one of liouville / gauge / impedance".into(),
            ));
        }
        if let Some(l) = &self.liouville {
            return Ok(ResolvedMap::Liouville(LiouvilleMap::new(
                l.eta.to_coefficient()?,
                l.kappa.to_coefficient()?,
                l.nu.to_coefficient()?,
            )?));
        }
        if let Some(g) = &self.gauge {
            return Ok(ResolvedMap::Gauge(GaugeSpec::new(
                g.eta0,
                g.nu.to_coefficient()?,
            )));
        }
        let i = self.impedance.as_ref().unwrap();
        Ok(ResolvedMap::Impedance(ImpedanceSpec {
            eta0: i.eta0,
            nu0: i.nu0,
            kappa0: i.kappa0,
            base: i.base,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_free_builds() {
        let cfg = ProblemConfig::parse(r#"{"preset": "free"}"#).unwrap();
        let (c, phi_a, phi_b) = cfg.build().unwrap();
        assert!(c.is_schroedinger());
        assert_eq!(phi_a.angle(), 0.0);
        assert_eq!(phi_b.angle(), 0.0);
        assert!((c.b() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn explicit_problem_round_trips() {
        let text = r#"{
            "p": {"breakpoints": [0.0, 3.0], "pieces": [[1.0]]},
            "q": {"breakpoints": [0.0, 1.0, 3.0], "pieces": [[0.5], [-0.25, 1.0]]},
            "r": {"breakpoints": [0.0, 3.0], "pieces": [[1.0]]},
            "s": {"breakpoints": [0.0, 3.0], "pieces": [[0.0]]},
            "phi_a": 0.4
        }"#;
        let cfg = ProblemConfig::parse(text).unwrap();
        let (c, phi_a, _) = cfg.build().unwrap();
        assert_eq!(phi_a.angle(), 0.4);
        assert!((c.q().eval(2.0) - 0.75).abs() < 1e-15);

        let emitted = ProblemConfig::from_parts(
            &c,
            BoundaryCondition::new(0.4).unwrap(),
            BoundaryCondition::DIRICHLET,
        );
        let reparsed = ProblemConfig::parse(&emitted.to_json()).unwrap();
        let (c2, _, _) = reparsed.build().unwrap();
        for k in 0..=30 {
            let x = 3.0 * (k as f64 + 0.2) / 31.0;
            assert_eq!(c.q().eval(x), c2.q().eval(x));
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ProblemConfig::parse(r#"{"preset": "free", "nonsense": 1}"#);
        assert!(matches!(err, Err(Error::Config(_))));
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("nonsense"), "{msg}");
    }

    #[test]
    fn bad_coefficients_rejected_at_build() {
        let text = r#"{
            "p": {"breakpoints": [0.0, 1.0], "pieces": [[-0.5, 1.0]]},
            "q": {"breakpoints": [0.0, 1.0], "pieces": [[0.0]]},
            "r": {"breakpoints": [0.0, 1.0], "pieces": [[1.0]]},
            "s": {"breakpoints": [0.0, 1.0], "pieces": [[0.0]]}
        }"#;
        let cfg = ProblemConfig::parse(text).unwrap();
        let err = cfg.build();
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn map_config_variants() {
        let g = MapConfig::parse(
            r#"{"gauge": {"eta0": 0.0, "nu": {"breakpoints": [0.0, 3.141592653589793], "pieces": [[0.0]]}}}"#,
        )
        .unwrap();
        assert!(matches!(g.resolve().unwrap(), ResolvedMap::Gauge(_)));

        let i =
            MapConfig::parse(r#"{"impedance": {"nu0": 0.0, "kappa0": 3.0, "base": 0.0}}"#).unwrap();
        assert!(matches!(i.resolve().unwrap(), ResolvedMap::Impedance(_)));

        let both = MapConfig::parse(
            r#"{"impedance": {"nu0": 0.0, "kappa0": 3.0, "base": 0.0},
                "gauge": {"nu": {"breakpoints": [0.0, 1.0], "pieces": [[0.0]]}}}"#,
        )
        .unwrap();
        assert!(both.resolve().is_err());
    }
}
