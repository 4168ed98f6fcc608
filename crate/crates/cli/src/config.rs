//! Key = value config files with [section] headers. Strict: unknown sections
//! or keys are errors, so typos surface instead of silently using defaults.

use std::collections::BTreeMap;

use rdoa_core::array::SourceScene;
use rdoa_core::ces::DensityGenerator;
use rdoa_core::mc::{EstimatorKind, ExperimentConfig};
use rdoa_core::{CMat, Cx};

use crate::CliError;

type Section = BTreeMap<String, String>;

#[derive(Debug)]
pub struct Config {
    sections: BTreeMap<String, Section>,
}

pub fn parse(text: &str) -> Result<Config, CliError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad_line(idx, "unterminated [section] header"))?
                .trim()
                .to_ascii_lowercase();
            if sections.contains_key(&name) {
                return Err(bad_line(idx, &format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad_line(idx, "expected key = value"))?;
        let section = current
            .as_ref()
            .ok_or_else(|| bad_line(idx, "key before any [section] header"))?;
        let key = key.trim().to_ascii_lowercase();
        let entry = sections.get_mut(section).expect("section exists");
        if entry.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(bad_line(idx, &format!("duplicate key {key}")));
        }
    }
    Ok(Config { sections })
}

fn bad_line(idx: usize, what: &str) -> CliError {
    CliError::Config(format!("config line {}: {what}", idx + 1))
}

pub fn load(path: &std::path::Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl Config {
    fn take_section(&mut self, name: &str) -> Result<Section, CliError> {
        self.sections
            .remove(name)
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }

    pub fn reject_unknown_sections(&self, known: &[&str]) -> Result<(), CliError> {
        for name in self.sections.keys() {
            if !known.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown section [{name}]")));
            }
        }
        Ok(())
    }
}

struct Fields {
    name: &'static str,
    map: Section,
}

impl Fields {
    fn new(name: &'static str, map: Section) -> Self {
        Self { name, map }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String, CliError> {
        self.take(key)
            .ok_or_else(|| CliError::Config(format!("[{}] is missing {key}", self.name)))
    }

    fn f64(&mut self, key: &str) -> Result<f64, CliError> {
        parse_f64(self.name, key, &self.require(key)?)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.take(key)
            .map(|v| parse_f64(self.name, key, &v))
            .transpose()
    }

    fn usize(&mut self, key: &str) -> Result<usize, CliError> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| bad_value(self.name, key, &raw, "a non-negative integer"))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.take(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| bad_value(self.name, key, &raw, "a non-negative integer")),
            None => Ok(default),
        }
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.take(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| bad_value(self.name, key, &raw, "a non-negative integer")),
            None => Ok(default),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|piece| parse_f64(self.name, key, piece.trim()))
            .collect()
    }

    fn f64_list_opt(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|piece| parse_f64(self.name, key, piece.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.map.keys().next() {
            return Err(CliError::Config(format!(
                "[{}] has unknown key {key}",
                self.name
            )));
        }
        Ok(())
    }
}

fn parse_f64(section: &str, key: &str, raw: &str) -> Result<f64, CliError> {
    raw.parse()
        .map_err(|_| bad_value(section, key, raw, "a number"))
}

fn bad_value(section: &str, key: &str, raw: &str, wanted: &str) -> CliError {
    CliError::Config(format!("[{section}] {key} = {raw:?} is not {wanted}"))
}

/// The [scene] section. Source powers come either from snr_db (all sources at
/// sigma0sq * 10^(snr/10)) or from explicit sigma1sq/sigma2sq (two sources),
/// or from a full gamma_re/gamma_im listing; exactly one form.
pub fn scene(cfg: &mut Config) -> Result<SourceScene, CliError> {
    let mut f = Fields::new("scene", cfg.take_section("scene")?);
    let n = f.usize("n")?;
    let k = f.usize("k")?;
    let nu = f.f64_list("nu")?;
    if nu.len() != k {
        return Err(CliError::Config(format!(
            "[scene] nu lists {} frequencies but k = {k}",
            nu.len()
        )));
    }
    let sigma0sq = f.f64("sigma0sq")?;
    let snr_db = f.f64_opt("snr_db")?;
    let sigma1sq = f.f64_opt("sigma1sq")?;
    let sigma2sq = f.f64_opt("sigma2sq")?;
    let rho = f.f64_opt("rho")?;
    let gamma_re = f.f64_list_opt("gamma_re")?;
    let gamma_im = f.f64_list_opt("gamma_im")?;
    f.finish()?;

    let forms = [
        snr_db.is_some(),
        sigma1sq.is_some() || sigma2sq.is_some(),
        gamma_re.is_some() || gamma_im.is_some(),
    ];
    if forms.iter().filter(|&&x| x).count() != 1 {
        return Err(CliError::Config(
            "[scene] needs exactly one power form: snr_db, sigma1sq/sigma2sq, or gamma_re/gamma_im"
                .into(),
        ));
    }

    let scene = if let Some(re) = gamma_re {
        let im = gamma_im.unwrap_or_else(|| vec![0.0; k * k]);
        if re.len() != k * k || im.len() != k * k {
            return Err(CliError::Config(format!(
                "[scene] gamma_re/gamma_im need {} entries (row-major k x k)",
                k * k
            )));
        }
        let gamma = CMat::from_fn(k, k, |i, j| Cx::new(re[i * k + j], im[i * k + j]));
        SourceScene::new(n, nu, gamma, sigma0sq)
    } else if let Some(db) = snr_db {
        let power = sigma0sq * 10f64.powf(db / 10.0);
        match k {
            1 => SourceScene::new(n, nu, CMat::from_element(1, 1, Cx::new(power, 0.0)), sigma0sq),
            2 => {
                let rho =
                    rho.ok_or_else(|| CliError::Config("[scene] snr_db with k = 2 needs rho".into()))?;
                SourceScene::two_source(n, [nu[0], nu[1]], power, power, rho, sigma0sq)
            }
            _ => {
                return Err(CliError::Config(
                    "[scene] snr_db form only covers k = 1 or 2; use gamma_re/gamma_im".into(),
                ))
            }
        }
    } else {
        if k != 2 {
            return Err(CliError::Config(
                "[scene] sigma1sq/sigma2sq form needs k = 2".into(),
            ));
        }
        let s1 = sigma1sq.ok_or_else(|| CliError::Config("[scene] is missing sigma1sq".into()))?;
        let s2 = sigma2sq.ok_or_else(|| CliError::Config("[scene] is missing sigma2sq".into()))?;
        let rho = rho.ok_or_else(|| CliError::Config("[scene] is missing rho".into()))?;
        SourceScene::two_source(n, [nu[0], nu[1]], s1, s2, rho, sigma0sq)
    };
    scene.map_err(|e| CliError::Config(format!("[scene] invalid: {e}")))
}

#[derive(Debug)]
pub struct DataSpec {
    pub generator: DensityGenerator,
    pub snapshots: usize,
    pub seed: u64,
}

fn family(f: &mut Fields) -> Result<DensityGenerator, CliError> {
    let name = f.require("family")?.to_ascii_lowercase();
    let generator = match name.as_str() {
        "gaussian" => DensityGenerator::Gaussian,
        "t" => DensityGenerator::StudentT {
            lambda: f.f64("lambda")?,
        },
        "gg" => DensityGenerator::GeneralizedGaussian { s: f.f64("s")? },
        other => {
            return Err(CliError::Config(format!(
                "[{}] family = {other:?}, expected gaussian, t or gg",
                f.name
            )))
        }
    };
    generator
        .validate()
        .map_err(|e| CliError::Config(format!("[{}] {e}", f.name)))?;
    Ok(generator)
}

pub fn data(cfg: &mut Config) -> Result<DataSpec, CliError> {
    let mut f = Fields::new("data", cfg.take_section("data")?);
    let generator = family(&mut f)?;
    let snapshots = f.usize("snapshots")?;
    if snapshots == 0 {
        return Err(CliError::Config("[data] snapshots must be positive".into()));
    }
    let seed = f.u64_or("seed", 0)?;
    f.finish()?;
    Ok(DataSpec {
        generator,
        snapshots,
        seed,
    })
}

/// The [experiment] section: a sweep over one family's parameter. The
/// Gaussian family has no parameter, so it is a single point and must not
/// list sweep values.
pub fn experiment(cfg: &mut Config, scene: SourceScene) -> Result<ExperimentConfig, CliError> {
    let mut f = Fields::new("experiment", cfg.take_section("experiment")?);
    let name = f.require("family")?.to_ascii_lowercase();
    let sweep_values = f.f64_list_opt("sweep")?;
    let sweep: Vec<DensityGenerator> = match name.as_str() {
        "gaussian" => {
            if sweep_values.is_some() {
                return Err(CliError::Config(
                    "[experiment] the gaussian family has no sweep parameter".into(),
                ));
            }
            vec![DensityGenerator::Gaussian]
        }
        "t" => sweep_values
            .ok_or_else(|| CliError::Config("[experiment] is missing sweep".into()))?
            .into_iter()
            .map(|lambda| DensityGenerator::StudentT { lambda })
            .collect(),
        "gg" => sweep_values
            .ok_or_else(|| CliError::Config("[experiment] is missing sweep".into()))?
            .into_iter()
            .map(|s| DensityGenerator::GeneralizedGaussian { s })
            .collect(),
        other => {
            return Err(CliError::Config(format!(
                "[experiment] family = {other:?}, expected gaussian, t or gg"
            )))
        }
    };
    for generator in &sweep {
        generator
            .validate()
            .map_err(|e| CliError::Config(format!("[experiment] {e}")))?;
    }
    let snapshots = f.usize("snapshots")?;
    let runs = f.usize("runs")?;
    let master_seed = f.u64_or("master_seed", 0)?;
    let estimators = match f.take("estimators") {
        None => EstimatorKind::ALL.to_vec(),
        Some(raw) => raw
            .split(',')
            .map(|piece| {
                EstimatorKind::parse(piece)
                    .map_err(|e| CliError::Config(format!("[experiment] {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let grid = f.usize_or("grid", 4096)?;
    let outlier_threshold = f.f64_opt("outlier_threshold")?.unwrap_or(0.1);
    let exclude_outliers = match f
        .take("outlier_policy")
        .unwrap_or_else(|| "include".into())
        .to_ascii_lowercase()
        .as_str()
    {
        "include" => false,
        "exclude" => true,
        other => {
            return Err(CliError::Config(format!(
                "[experiment] outlier_policy = {other:?}, expected include or exclude"
            )))
        }
    };
    let workers = f.usize_or("workers", 0)?;
    f.finish()?;
    let cfg = ExperimentConfig {
        scene,
        sweep,
        snapshots,
        runs,
        master_seed,
        estimators,
        grid,
        outlier_threshold,
        exclude_outliers,
        workers,
    };
    cfg.validate()
        .map_err(|e| CliError::Config(format!("[experiment] {e}")))?;
    Ok(cfg)
}

/// Echo of the effective settings, written next to every simulate output.
pub fn echo_experiment(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    let scene = &cfg.scene;
    out.push_str(&format!("scene.n = {}\n", scene.n));
    out.push_str(&format!("scene.k = {}\n", scene.k()));
    let nu: Vec<String> = scene.nu.iter().map(|v| v.to_string()).collect();
    out.push_str(&format!("scene.nu = {}\n", nu.join(", ")));
    out.push_str(&format!("scene.sigma0sq = {}\n", scene.sigma0sq));
    let fmt_row = |pick: fn(&Cx) -> f64| {
        scene
            .gamma
            .row_iter()
            .flat_map(|row| row.iter().map(pick).collect::<Vec<_>>())
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    out.push_str(&format!("scene.gamma_re = {}\n", fmt_row(|c| c.re)));
    out.push_str(&format!("scene.gamma_im = {}\n", fmt_row(|c| c.im)));
    let family = cfg.sweep[0].label();
    out.push_str(&format!("experiment.family = {family}\n"));
    if cfg.sweep[0].parameter().is_some() {
        let values: Vec<String> = cfg
            .sweep
            .iter()
            .map(|g| g.parameter().map(|(_, v)| v.to_string()).unwrap_or_default())
            .collect();
        out.push_str(&format!("experiment.sweep = {}\n", values.join(", ")));
    }
    out.push_str(&format!("experiment.snapshots = {}\n", cfg.snapshots));
    out.push_str(&format!("experiment.runs = {}\n", cfg.runs));
    out.push_str(&format!("experiment.master_seed = {}\n", cfg.master_seed));
    let estimators: Vec<&str> = cfg.estimators.iter().map(|e| e.label()).collect();
    out.push_str(&format!("experiment.estimators = {}\n", estimators.join(", ")));
    out.push_str(&format!("experiment.grid = {}\n", cfg.grid));
    out.push_str(&format!(
        "experiment.outlier_threshold = {}\n",
        cfg.outlier_threshold
    ));
    out.push_str(&format!(
        "experiment.outlier_policy = {}\n",
        if cfg.exclude_outliers { "exclude" } else { "include" }
    ));
    out.push_str(&format!("experiment.workers = {}\n", cfg.workers));
    out
}
