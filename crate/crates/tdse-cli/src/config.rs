//! Experiment configuration: a schema-versioned TOML file with unknown keys
//! rejected, validated into core types before anything runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdse_core::grid::{DataGrid, Grid};
use tdse_core::potential::{PotentialKind, PotentialSpec};
use tdse_core::regularity::NormOrder;

use crate::CliError;

/// Schema revision accepted by this binary.
pub const SCHEMA_VERSION: u32 = 1;

/// Which experiment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Flow,
    Solve,
    Scatter,
    Norms,
    VerifyAll,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Flow => "flow",
            ExperimentName::Solve => "solve",
            ExperimentName::Scatter => "scatter",
            ExperimentName::Norms => "norms",
            ExperimentName::VerifyAll => "verify-all",
        }
    }
}

/// Raw `[grid]` section; routed through the validating constructor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

/// Raw `[potential]` section.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub center_z: Vec<f64>,
    #[serde(default)]
    pub center_t: f64,
    #[serde(default = "one")]
    pub width_z: f64,
    #[serde(default = "one")]
    pub width_t: f64,
    #[serde(default)]
    pub imag_amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Raw `[data]` section: a builtin family or a dump on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub hermite_m: Option<usize>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

/// Raw `[orders]` section.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersSection {
    #[serde(default)]
    pub s: f64,
    #[serde(default = "one")]
    pub l: f64,
    #[serde(default)]
    pub kappa: usize,
    #[serde(default = "one_usize")]
    pub k: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for OrdersSection {
    fn default() -> Self {
        OrdersSection { s: 0.0, l: 1.0, kappa: 0, k: 1 }
    }
}

/// The on-disk configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub experiment: Option<ExperimentName>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub refine: Option<u32>,
    /// Number of bicharacteristic seeds traced by the flow experiment.
    #[serde(default)]
    pub flow_seeds: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub orders: Option<OrdersSection>,
    #[serde(default)]
    pub tolerances: Option<BTreeMap<String, f64>>,
}

/// How the datum is produced, after validation.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DataSpec {
    Gaussian,
    Hermite { m: usize },
    Random { seed: u64 },
    File { path: PathBuf },
}

/// A validated, fully resolved experiment: every field ready to use.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub experiment: ExperimentName,
    pub grid: Option<Grid>,
    pub potential: PotentialSpec,
    pub data: DataSpec,
    pub orders: NormOrder,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub refine: u32,
    pub flow_seeds: usize,
    /// Raw config retained for the report echo.
    pub raw: RawConfig,
}

impl Resolved {
    /// Tolerance override with a default.
    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// The grid, which validation guarantees for every experiment that
    /// needs one.
    pub fn grid(&self) -> Grid {
        self.grid.expect("validated experiment has a grid")
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

/// Parse and validate a config file, folding in command-line overrides.
pub fn load(
    path: Option<&Path>,
    experiment_flag: Option<ExperimentName>,
    out_flag: Option<&Path>,
    seed_flag: Option<u64>,
    refine_flag: Option<u32>,
) -> Result<Resolved, CliError> {
    let raw: RawConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                invalid(format!("cannot read config {}: {e}", p.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| invalid(format!("config {}: {e}", p.display())))?
        }
        None => {
            // Only `verify-all` is meaningful without a config file.
            if experiment_flag != Some(ExperimentName::VerifyAll) {
                return Err(invalid(
                    "--config is required unless the experiment is verify-all",
                ));
            }
            RawConfig {
                schema_version: SCHEMA_VERSION,
                experiment: Some(ExperimentName::VerifyAll),
                output_dir: None,
                seed: None,
                refine: None,
                flow_seeds: None,
                grid: None,
                potential: None,
                data: None,
                orders: None,
                tolerances: None,
            }
        }
    };

    if raw.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema_version {} (this binary expects {SCHEMA_VERSION})",
            raw.schema_version
        )));
    }

    let experiment = experiment_flag
        .or(raw.experiment)
        .ok_or_else(|| invalid("no experiment selected: set `experiment` in the config or pass --experiment"))?;

    let grid = match &raw.grid {
        Some(g) => Some(
            Grid::new(g.n, g.points_per_axis, g.half_width, g.t0, g.t1, g.steps)
                .map_err(|e| invalid(format!("grid: {e}")))?,
        ),
        None => None,
    };
    if grid.is_none() && experiment != ExperimentName::VerifyAll {
        return Err(invalid(format!(
            "experiment `{}` needs a [grid] section",
            experiment.as_str()
        )));
    }

    let potential = match &raw.potential {
        None => PotentialSpec::zero(),
        Some(p) => {
            let spec = PotentialSpec {
                kind: p.kind,
                amplitude: p.amplitude,
                center_z: p.center_z.clone(),
                center_t: p.center_t,
                width_z: p.width_z,
                width_t: p.width_t,
                imag_amplitude: p.imag_amplitude,
            };
            if p.kind != PotentialKind::Zero {
                let n = grid.map(|g| g.n).unwrap_or(p.center_z.len());
                if p.center_z.len() != n {
                    return Err(invalid(format!(
                        "potential center_z has {} entries for dimension {n}",
                        p.center_z.len()
                    )));
                }
                if !(p.width_z > 0.0) || !(p.width_t > 0.0) {
                    return Err(invalid("potential widths must be positive"));
                }
                if !p.amplitude.is_finite() || !p.imag_amplitude.is_finite() {
                    return Err(invalid("potential amplitudes must be finite"));
                }
            }
            spec
        }
    };

    let seed = seed_flag.or(raw.seed).unwrap_or(0);

    let data = match &raw.data {
        None => DataSpec::Gaussian,
        Some(d) => {
            if d.path.is_some() && d.builtin.is_some() {
                return Err(invalid("[data] sets both `builtin` and `path`; pick one"));
            }
            if let Some(p) = &d.path {
                if d.hermite_m.is_some() {
                    return Err(invalid("[data] `hermite_m` only applies to builtin = \"hermite\""));
                }
                DataSpec::File { path: p.clone() }
            } else {
                match d.builtin.as_deref() {
                    None | Some("gaussian") => {
                        if d.hermite_m.is_some() {
                            return Err(invalid(
                                "[data] `hermite_m` only applies to builtin = \"hermite\"",
                            ));
                        }
                        DataSpec::Gaussian
                    }
                    Some("hermite") => {
                        let m = d.hermite_m.ok_or_else(|| {
                            invalid("builtin = \"hermite\" needs `hermite_m`")
                        })?;
                        if m > 8 {
                            return Err(invalid(format!(
                                "hermite_m = {m} too large (max 8)"
                            )));
                        }
                        DataSpec::Hermite { m }
                    }
                    Some("random") => {
                        if d.hermite_m.is_some() {
                            return Err(invalid(
                                "[data] `hermite_m` only applies to builtin = \"hermite\"",
                            ));
                        }
                        DataSpec::Random { seed }
                    }
                    Some(other) => {
                        return Err(invalid(format!(
                            "unknown builtin datum `{other}` (gaussian, hermite, random)"
                        )));
                    }
                }
            }
        }
    };

    let orders_raw = raw.orders.unwrap_or_default();
    if orders_raw.kappa + orders_raw.k > 3 {
        return Err(invalid(format!(
            "orders: kappa + k = {} exceeds the module-word cap of 3",
            orders_raw.kappa + orders_raw.k
        )));
    }
    if !orders_raw.s.is_finite() || !orders_raw.l.is_finite() {
        return Err(invalid("orders: s and l must be finite"));
    }
    let orders = NormOrder::new(orders_raw.s, orders_raw.l, orders_raw.kappa, orders_raw.k);

    let tolerances = raw.tolerances.clone().unwrap_or_default();
    for (k, v) in &tolerances {
        if !v.is_finite() || *v < 0.0 {
            return Err(invalid(format!("tolerance `{k}` must be finite and non-negative")));
        }
    }

    let flow_seeds = raw.flow_seeds.unwrap_or(4);
    if flow_seeds == 0 || flow_seeds > 64 {
        return Err(invalid("flow_seeds must be between 1 and 64"));
    }

    let refine = refine_flag.or(raw.refine).unwrap_or(0);
    if refine > 4 {
        return Err(invalid("refine levels above 4 multiply the step count past reason"));
    }

    // Experiment-specific window checks.
    if let Some(g) = grid {
        match experiment {
            ExperimentName::Scatter => {
                if !(g.t0 < 0.0 && g.t1 > 0.0) {
                    return Err(invalid(
                        "scatter needs a slab with t0 < 0 < t1 so both asymptotic sides exist",
                    ));
                }
            }
            ExperimentName::Solve | ExperimentName::Norms => {}
            ExperimentName::Flow | ExperimentName::VerifyAll => {}
        }
        if experiment != ExperimentName::Flow
            && experiment != ExperimentName::VerifyAll
            && g.steps < 8
        {
            return Err(invalid(
                "field experiments need at least 8 time steps (residual stencils use five slices)",
            ));
        }
        if experiment != ExperimentName::Flow && experiment != ExperimentName::VerifyAll {
            // Dispersive-cone check: the datum window supported by this slab
            // must keep a few modes, or group velocity 2*zeta sweeps the wave
            // out of the box before the far slices.
            let window = DataGrid::default_for(&g);
            if window.modes < 4 {
                return Err(invalid(format!(
                    "slab keeps only {} datum modes inside the dispersive cone; \
                     widen the box or shorten the time window",
                    window.modes
                )));
            }
        }
    }

    let output_dir = out_flag
        .map(Path::to_path_buf)
        .or_else(|| raw.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(Resolved {
        experiment,
        grid,
        potential,
        data,
        orders,
        tolerances,
        output_dir,
        seed,
        refine,
        flow_seeds,
        raw,
    })
}
