use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cclab_core::geometry::{CantorSpec, LambdaSeq};
use cclab_core::kernel::KernelKind;

use crate::CliError;

/// `lambda = 0.25` or `lambda = [0.25, 0.3, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaInput {
    Constant(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentSection {
    /// Content dimension; defaults to `n`.
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BmoSection {
    pub cubes: Option<usize>,
    pub nodes_per_cube: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipSection {
    pub alpha: Option<f64>,
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSection {
    /// Angle with the spatial axis, radians. `π/2` is vertical.
    pub angle: Option<f64>,
    pub length: Option<f64>,
    pub ms: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub nx: Option<usize>,
    pub nt: Option<usize>,
    /// Margin around `Q^0`, in units of its side.
    pub margin: Option<f64>,
}

/// The config file as written; every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub lambda: Option<LambdaInput>,
    pub tau0: Option<f64>,
    pub kmin: Option<usize>,
    pub kmax: Option<usize>,
    pub tol: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub evaluator: Option<String>,
    pub kernel: Option<String>,
    pub content: ContentSection,
    pub bmo: BmoSection,
    pub lip: LipSection,
    pub segment: SegmentSection,
    pub field: FieldSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Flag values; `Some` overrides the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub kmax: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub spec: CantorSpec,
    pub kmin: usize,
    pub kmax: usize,
    /// `None` means the per-depth default.
    pub tol: Option<f64>,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub evaluator: String,
    pub kernel: KernelKind,
    pub content_d: f64,
    pub bmo_cubes: usize,
    pub bmo_nodes: usize,
    pub lip_alpha: f64,
    pub lip_pairs: usize,
    pub segment_angle: f64,
    pub segment_length: f64,
    pub segment_ms: Vec<usize>,
    pub field_nx: usize,
    pub field_nt: usize,
    pub field_margin: f64,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let n = flags.n.or(file.n).unwrap_or(1);
        let lambdas = match (flags.lambda, file.lambda) {
            (Some(l), _) => LambdaSeq::Constant(l),
            (None, Some(LambdaInput::Constant(l))) => LambdaSeq::Constant(l),
            (None, Some(LambdaInput::List(v))) => LambdaSeq::List(v),
            (None, None) => LambdaSeq::Constant(0.25),
        };
        let spec = CantorSpec::new(n, lambdas, file.tau0)?;
        let kmin = file.kmin.unwrap_or(0);
        let kmax = flags.kmax.or(file.kmax).unwrap_or(4);
        if kmin > kmax {
            return Err(CliError::Config(format!("kmin = {kmin} exceeds kmax = {kmax}")));
        }
        if let Some(depth) = spec.available_depth() {
            if kmax > depth {
                return Err(CliError::Config(format!("kmax = {kmax} exceeds the {depth} supplied lambdas")));
            }
        }
        let tol = flags.tol.or(file.tol).map(|t| positive("tol", t)).transpose()?;
        let seeds = match flags.seed {
            Some(s) => vec![s],
            None => file.seeds.unwrap_or_else(|| vec![1]),
        };
        if seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        let threads = flags.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        let evaluator = file.evaluator.unwrap_or_else(|| "tree".into());
        let evaluators = cclab_core::potential::evaluator_registry();
        evaluators.get(&evaluator).map_err(|e| CliError::Config(e.to_string()))?;
        let kernel =
            KernelKind::parse(file.kernel.as_deref().unwrap_or("P")).map_err(|e| CliError::Config(e.to_string()))?;

        let lip_alpha = file.lip.alpha.unwrap_or(0.2);
        if !(lip_alpha > 0.0 && lip_alpha < 1.0) {
            return Err(CliError::Config(format!("lip.alpha must lie in (0, 1), got {lip_alpha}")));
        }
        let segment_ms = file.segment.ms.unwrap_or_else(|| vec![100, 1_000, 10_000]);
        if segment_ms.is_empty() || segment_ms.contains(&0) {
            return Err(CliError::Config("segment.ms must be a non-empty list of positive counts".into()));
        }
        Ok(Self {
            kmin,
            kmax,
            tol,
            seeds,
            threads,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            evaluator,
            kernel,
            content_d: positive("content.d", file.content.d.unwrap_or(spec.n() as f64))?,
            bmo_cubes: file.bmo.cubes.unwrap_or(200),
            bmo_nodes: file.bmo.nodes_per_cube.unwrap_or(256),
            lip_alpha,
            lip_pairs: file.lip.pairs.unwrap_or(10_000),
            segment_angle: file.segment.angle.unwrap_or(std::f64::consts::FRAC_PI_2),
            segment_length: positive("segment.length", file.segment.length.unwrap_or(1.0))?,
            segment_ms,
            field_nx: file.field.nx.unwrap_or(64).max(1),
            field_nt: file.field.nt.unwrap_or(64).max(1),
            field_margin: file.field.margin.unwrap_or(0.5),
            spec,
        })
    }

    pub fn tol_for(&self, k: usize) -> f64 {
        self.tol.unwrap_or_else(|| cclab_core::capacity::default_tol(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let file: FileConfig = toml::from_str("n = 2\nlambda = 0.3\nkmax = 3\nseeds = [4, 5]\n").unwrap();
        let flags = Overrides { lambda: Some(0.25), seed: Some(9), ..Default::default() };
        let c = RunConfig::resolve(file, flags).unwrap();
        assert_eq!(c.spec.n(), 2);
        assert_eq!(c.spec.lambda(1).unwrap(), 0.25);
        assert_eq!(c.kmax, 3);
        assert_eq!(c.seeds, vec![9]);
    }

    #[test]
    fn lambda_lists_and_json() {
        let file: FileConfig = serde_json::from_str(r#"{"lambda": [0.25, 0.3], "kmax": 2}"#).unwrap();
        let c = RunConfig::resolve(file, Overrides::default()).unwrap();
        assert_eq!(c.spec.lambda(2).unwrap(), 0.3);
        let file: FileConfig = serde_json::from_str(r#"{"lambda": [0.25, 0.3], "kmax": 3}"#).unwrap();
        assert!(matches!(RunConfig::resolve(file, Overrides::default()), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("lamda = 0.3\n").is_err());
    }
}
