//! Run configuration files.
//!
//! A configuration is TOML with the sections below. Every section and every
//! key is optional; an absent key takes the default of the experiment being
//! run. Unknown keys anywhere are errors.
//!
//! ```toml
//! seed = 7                     # overridden by --seed
//!
//! [physical]
//! nu = 1.0                     # viscosity, acts through ∂₂₂ on u
//! eta = 1.0                    # diffusivity, acts through ∂₁₁ on θ
//!
//! [grid]
//! n1 = 128                     # points along x₁
//! n2 = 128                     # points along x₂
//! l1 = 1.0                     # box is [0, 2π l1) × [0, 2π l2)
//! l2 = 1.0
//!
//! [time]
//! dt = 1e-3
//! t_final = 10.0               # integer multiple of dt
//! record_every = 1             # steps between diagnostics records
//!
//! [scheme]
//! kind = "if-rk4"              # or "imex-cn"
//! nonlinear = true             # false drops the advection terms
//!
//! [diagnostics]
//! a1 = 1.0                     # cutoff: keep |ξ₁| > a1 and |ξ₂| > a2
//! a2 = 1.0
//! lambda = 0.5                 # weight of the Lyapunov pair
//! delta = 0.1                  # weight of ∫‖∂₁u₂‖² in E(t)
//!
//! [initial]
//! family = "random"            # or "taylor-green"
//! epsilon = 1e-2               # combined H² norm of (u₀, θ₀)
//! band = 4                     # random modes with max(|m₁|,|m₂|) ≤ band
//! ```
//!
//! Experiment-specific sections (`[linear_verify]`, `[kernel_bounds]`,
//! `[decay_rates]`, `[exp_decay]`, `[stability_sweep]`,
//! `[energy_balance]`) are documented on their structs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::default_delta;
use crate::error::{Error, Result};
use crate::kernels::Params;
use crate::nonlinear::{GridSpec, Scheme, SimConfig};
use crate::quadrature::{ClosedFormSpectrum, Component, DecayCase, InitialSpectra};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    #[serde(default)]
    pub physical: PhysicalSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub linear_verify: LinearVerifySection,
    #[serde(default)]
    pub kernel_bounds: KernelBoundsSection,
    #[serde(default)]
    pub decay_rates: DecayRatesSection,
    #[serde(default)]
    pub exp_decay: ExpDecaySection,
    #[serde(default)]
    pub stability_sweep: StabilitySweepSection,
    #[serde(default)]
    pub energy_balance: EnergyBalanceSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    pub nu: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: Option<Scheme>,
    pub nonlinear: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    /// Band-limited random solenoidal velocity and random temperature.
    Random,
    /// `ψ = sin x₁ sin x₂` and `θ = cos(x₁ + x₂)`.
    TaylorGreen,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub family: Option<InitialFamily>,
    pub epsilon: Option<f64>,
    pub band: Option<i64>,
}

/// Resolved initial-data recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialSpec {
    pub family: InitialFamily,
    pub epsilon: f64,
    pub band: i64,
}

/// `[linear_verify]`: exact propagator against the RK4 oracle over the
/// product of `nu × eta × times`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearVerifySection {
    pub times: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    /// Largest admissible relative mode error.
    pub tolerance: Option<f64>,
}

/// `[kernel_bounds]`: root identities on random frequencies and kernel
/// envelope fits on a geometric lattice.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBoundsSection {
    /// Random `(ξ, ν, η)` draws for the root checks.
    pub samples: Option<usize>,
    pub vieta_tolerance: Option<f64>,
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub n_xi: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_t: Option<usize>,
    pub c_max: Option<f64>,
    pub c0_min: Option<f64>,
}

/// `[decay_rates]`: ℝ² norms by quadrature on a geometric time grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayRatesSection {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub rel_tol: Option<f64>,
    /// Fitted log-log slopes must not exceed this.
    pub slope_max: Option<f64>,
    pub cases: Option<Vec<DecayCase>>,
}

/// `[exp_decay]`: Lyapunov pair on the exact linear trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpDecaySection {
    /// Spacing of the sampled times.
    pub sample_dt: Option<f64>,
    pub horizon: Option<f64>,
    /// Required fraction of `C₀` for the fitted rate.
    pub rate_fraction: Option<f64>,
}

/// `[stability_sweep]`: nonlinear runs over `epsilons × seeds`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySweepSection {
    pub epsilons: Option<Vec<f64>>,
    pub seeds: Option<u64>,
    /// Verdict "bounded" requires `max E(t)/E(0)` at most this.
    pub bound: Option<f64>,
}

/// `[energy_balance]`: L² identity along a nonlinear run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBalanceSection {
    pub drift_tolerance: Option<f64>,
}

/// Experiment-specific defaults for the simulation sections.
#[derive(Debug, Clone, Copy)]
pub struct SimDefaults {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub nonlinear: bool,
    pub initial: InitialSpec,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(
            self.physical.nu.unwrap_or(1.0),
            self.physical.eta.unwrap_or(1.0),
        )
    }

    /// Merge the simulation sections over experiment defaults and validate.
    pub fn sim_config(&self, d: &SimDefaults, seed: u64) -> Result<SimConfig> {
        let params = self.params()?;
        let g = &self.grid;
        let grid = GridSpec {
            n1: g.n1.unwrap_or(d.n),
            n2: g.n2.unwrap_or(d.n),
            l1: g.l1.unwrap_or(1.0),
            l2: g.l2.unwrap_or(1.0),
        };
        let mut cfg = SimConfig::new(
            params,
            grid,
            self.time.dt.unwrap_or(d.dt),
            self.time.t_final.unwrap_or(d.t_final),
        );
        cfg.record_every = self.time.record_every.unwrap_or(d.record_every);
        cfg.scheme = self.scheme.kind.unwrap_or(Scheme::IfRk4);
        cfg.nonlinear = self.scheme.nonlinear.unwrap_or(d.nonlinear);
        let dg = &self.diagnostics;
        cfg.a1 = dg.a1.unwrap_or(1.0);
        cfg.a2 = dg.a2.unwrap_or(1.0);
        cfg.lyap_lambda = dg.lambda.unwrap_or(0.5);
        cfg.delta = dg.delta.unwrap_or_else(|| default_delta(&params));
        cfg.seed = seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial(&self, d: &InitialSpec) -> Result<InitialSpec> {
        let spec = InitialSpec {
            family: self.initial.family.unwrap_or(d.family),
            epsilon: self.initial.epsilon.unwrap_or(d.epsilon),
            band: self.initial.band.unwrap_or(d.band),
        };
        if !(spec.epsilon > 0.0 && spec.epsilon.is_finite()) {
            return Err(Error::invalid("initial.epsilon", "must be positive"));
        }
        if spec.band < 1 {
            return Err(Error::invalid("initial.band", "must be at least 1"));
        }
        Ok(spec)
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration
    /// (so formatting and comments do not matter), with the effective seed.
    pub fn hash(&self, seed: u64) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update(seed.to_le_bytes());
        hex::encode(h.finalize())
    }
}

/// The two canonical quadrature cases: `θ̂₀ = ξ₁² e^{−|ξ|²}`, `u₀ = 0`,
/// `(s, σ) = (0, 2)`, for `θ` and for `u₂`.
pub fn default_decay_cases() -> Vec<DecayCase> {
    let init = InitialSpectra::theta_only(ClosedFormSpectrum::xi1sq_weighted());
    [Component::Theta, Component::U2]
        .into_iter()
        .map(|c| DecayCase {
            id: format!("{}-s0-sigma2", c.as_str()),
            component: c,
            s: 0.0,
            sigma: 2.0,
            init,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULTS: SimDefaults = SimDefaults {
        n: 32,
        dt: 1e-2,
        t_final: 1.0,
        record_every: 1,
        nonlinear: true,
        initial: InitialSpec {
            family: InitialFamily::Random,
            epsilon: 1e-2,
            band: 4,
        },
    };

    #[test]
    fn empty_config_takes_defaults() {
        let c = Config::from_toml_str("").unwrap();
        let s = c.sim_config(&DEFAULTS, 3).unwrap();
        assert_eq!(s.grid, GridSpec::square(32));
        assert_eq!(s.delta, 0.1);
        assert_eq!(s.seed, 3);
    }

    #[test]
    fn sections_override() {
        let c = Config::from_toml_str(
            "[physical]\nnu = 2.0\neta = 0.5\n[grid]\nn1 = 16\n[scheme]\nkind = \"imex-cn\"\n",
        )
        .unwrap();
        let s = c.sim_config(&DEFAULTS, 0).unwrap();
        assert_eq!((s.params.nu, s.params.eta), (2.0, 0.5));
        assert_eq!((s.grid.n1, s.grid.n2), (16, 32));
        assert_eq!(s.scheme, Scheme::ImexCn);
        assert_eq!(s.delta, 0.05);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["[physical]\nnuu = 1.0\n", "[gird]\nn1 = 4\n", "bogus = 1\n"] {
            let e = Config::from_toml_str(text).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{text}");
        }
        let e = Config::from_toml_str("[physical]\nnuu = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("nuu"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let c = Config::from_toml_str("[physical]\nnu = -1.0\n").unwrap();
        assert!(c.sim_config(&DEFAULTS, 0).is_err());
        let c = Config::from_toml_str("[time]\ndt = 0.3\nt_final = 1.0\n").unwrap();
        assert!(c.sim_config(&DEFAULTS, 0).is_err());
    }

    #[test]
    fn quadrature_cases_parse() {
        let c = Config::from_toml_str(
            r#"
[[decay_rates.cases]]
id = "a"
component = "theta"
s = 0.0
sigma = 2.0
init = { theta = { kind = "xi1sq_weighted_gaussian" } }
"#,
        )
        .unwrap();
        let cases = c.decay_rates.cases.unwrap();
        assert_eq!(cases[0], default_decay_cases()[0].clone().with_id("a"));
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = Config::from_toml_str("[physical]\nnu = 1.0\n").unwrap();
        let b = Config::from_toml_str("# comment\n[physical]\nnu   =   1.0\n").unwrap();
        let c = Config::from_toml_str("[physical]\nnu = 2.0\n").unwrap();
        assert_eq!(a.hash(1), b.hash(1));
        assert_ne!(a.hash(1), c.hash(1));
        assert_ne!(a.hash(1), a.hash(2));
    }

    trait WithId {
        fn with_id(self, id: &str) -> Self;
    }
    impl WithId for DecayCase {
        fn with_id(mut self, id: &str) -> Self {
            self.id = id.into();
            self
        }
    }
}
