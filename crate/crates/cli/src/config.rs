//! Run configuration: defaults, then an optional JSON/TOML file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use homoclinic_core::bifurcation::{ScanVariable, Slice};
use homoclinic_core::systems::{FieldPreset, ForcingPreset};
use homoclinic_core::variational::FrameNormalization;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Zero threshold for condition verdicts, in `Δ(0) = 1` units.
    pub zero: f64,
    pub line_quadrature: f64,
    pub plane_quadrature: f64,
    /// Fixed-point tolerance of the range equation.
    pub reduction: f64,
    /// Newton tolerance of the shooting solver.
    pub shooting: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-6,
            line_quadrature: 1e-11,
            plane_quadrature: 1e-9,
            reduction: 1e-12,
            shooting: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldPreset,
    pub forcing: ForcingPreset,
    /// Half-width `T` of the time window.
    pub window: f64,
    pub normalization: FrameNormalization,
    pub tolerances: Tolerances,
    /// Phase shifts at which conditions are evaluated.
    pub beta: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub slice: Option<Slice>,
    pub out: PathBuf,
    /// Seed for the random probes that check the field's derivatives.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: FieldPreset::default(),
            forcing: ForcingPreset::A1,
            window: 20.0,
            normalization: FrameNormalization::default(),
            tolerances: Tolerances::default(),
            beta: vec![0.0],
            epsilons: vec![1e-2, 1e-3, 1e-4],
            slice: None,
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.window.is_finite() && self.window > 0.0, "window must be positive, got {}", self.window);
        ensure!(self.beta.iter().all(|b| b.is_finite()), "beta values must be finite");
        ensure!(self.epsilons.iter().all(|e| e.is_finite()), "epsilon values must be finite");
        let t = &self.tolerances;
        for (name, v) in [
            ("zero", t.zero),
            ("line_quadrature", t.line_quadrature),
            ("plane_quadrature", t.plane_quadrature),
            ("reduction", t.reduction),
            ("shooting", t.shooting),
        ] {
            ensure!(v.is_finite() && v > 0.0, "tolerance {name} must be positive, got {v}");
        }
        ensure!(
            self.normalization.scale.is_finite() && self.normalization.scale != 0.0 && self.normalization.mix.is_finite(),
            "normalization needs a finite nonzero scale and finite mix"
        );
        self.field.powerlaw()?;
        if let Some(s) = &self.slice {
            s.validate()?;
        }
        Ok(())
    }
}

/// Built-in field presets with their default coefficients.
pub fn field_preset(name: &str) -> Result<FieldPreset> {
    Ok(match name {
        "powerlaw" => FieldPreset::default(),
        // Keeps the loop intact: the damping is proportional to the energy level.
        "powerlaw-damped" => FieldPreset::PowerlawLevelDamped {
            nu: 1.0,
            mu: 1.0,
            p: 2,
            c: 0.3,
        },
        "powerlaw-rotated" => FieldPreset::PowerlawRotated {
            nu: 1.0,
            mu: 1.0,
            p: 2,
            angle: 0.4,
        },
        other => bail!("unknown preset '{other}' (expected powerlaw, powerlaw-damped or powerlaw-rotated)"),
    })
}

/// `a1`, `none`, `const:<c>` or `cos:<amplitude>:<frequency>`.
pub fn forcing_preset(spec: &str) -> Result<ForcingPreset> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().with_context(|| format!("bad number '{s}' in forcing '{spec}'"));
    Ok(match parts.as_slice() {
        ["a1"] => ForcingPreset::A1,
        ["none"] => ForcingPreset::None,
        ["const", c] => ForcingPreset::Const { c: num(c)? },
        ["cos", a, w] => ForcingPreset::Cos {
            amplitude: num(a)?,
            frequency: num(w)?,
        },
        _ => bail!("unknown forcing '{spec}' (expected a1, none, const:<c> or cos:<amplitude>:<frequency>)"),
    })
}

/// A single value or an inclusive grid `lo:hi:n`.
pub fn beta_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().with_context(|| format!("bad beta '{spec}'"))?]),
        [lo, hi, n] => {
            let lo: f64 = lo.parse().with_context(|| format!("bad beta grid '{spec}'"))?;
            let hi: f64 = hi.parse().with_context(|| format!("bad beta grid '{spec}'"))?;
            let n: usize = n.parse().with_context(|| format!("bad beta grid '{spec}'"))?;
            ensure!(n >= 1, "beta grid needs at least one point");
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
        }
        _ => bail!("bad beta '{spec}' (expected a number or lo:hi:n)"),
    }
}

/// Comma-separated ε values; an empty string is an empty list.
pub fn eps_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad epsilon '{s}'")))
        .collect()
}

/// `variable:lo:hi:samples`, holding the other coordinates at ξ = 0, α = 1, β = 0.
pub fn slice_spec(spec: &str) -> Result<Slice> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [var, lo, hi, n] = parts.as_slice() else {
        bail!("bad slice '{spec}' (expected variable:lo:hi:samples)");
    };
    let variable: ScanVariable = var.parse()?;
    let slice = Slice {
        variable,
        lo: lo.parse().with_context(|| format!("bad slice bound '{lo}'"))?,
        hi: hi.parse().with_context(|| format!("bad slice bound '{hi}'"))?,
        samples: n.parse().with_context(|| format!("bad sample count '{n}'"))?,
        xi: 0.0,
        alpha: 1.0,
        beta: 0.0,
    };
    slice.validate()?;
    Ok(slice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flag_values() {
        assert_eq!(beta_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(eps_list("").unwrap(), Vec::<f64>::new());
        assert_eq!(eps_list("1e-2, 1e-3").unwrap(), vec![1e-2, 1e-3]);
        assert_eq!(forcing_preset("cos:1:2").unwrap(), ForcingPreset::Cos { amplitude: 1.0, frequency: 2.0 });
        assert_eq!(slice_spec("alpha:0.9:1.1:5").unwrap().samples, 5);
        assert!(forcing_preset("sin").is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = serde_json::from_str::<RunConfig>(r#"{"window": 10, "windw": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig {
            slice: Some(slice_spec("beta:-1:1:9").unwrap()),
            forcing: ForcingPreset::Const { c: 0.5 },
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
