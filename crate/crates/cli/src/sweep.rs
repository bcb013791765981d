use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use ltlab::bloch::PotentialField;
use ltlab::constants::one_bound_state_constant;
use ltlab::format::sci;
use ltlab::scf::{optimize_from, OptimizationResult, ScfConfig, CSV_HEADER};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const POINTS_DIR: &str = "points";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const TIMINGS_CSV: &str = "timings.csv";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn digest(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes())[..12])
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn json_str(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

#[derive(Debug, Clone)]
pub struct Point {
    pub index: usize,
    pub config: ScfConfig,
    pub key: String,
}

/// A grid of `(γ, I)` points sharing every other setting.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: ScfConfig,
    pub gammas: Vec<f64>,
    pub norms: Vec<f64>,
    pub warm_start: bool,
}

impl SweepPlan {
    /// Points in canonical order: `γ` outer, `I` inner.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &gamma in &self.gammas {
            for &norm in &self.norms {
                let config = ScfConfig { gamma, norm, ..self.base.clone() };
                let key = digest(&format!("{};warm={}", config.canonical(), self.warm_start));
                out.push(Point { index: out.len(), config, key });
            }
        }
        out
    }

    pub fn run_id(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(",");
        digest(&format!(
            "{};gammas={};norms={};warm={}",
            self.base.canonical(),
            list(&self.gammas),
            list(&self.norms),
            self.warm_start
        ))
    }
}

/// Record of what an output directory holds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: String,
    pub config: String,
    pub warm_start: bool,
    pub points: Vec<String>,
    pub completed: BTreeSet<String>,
    pub failed: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(plan: &SweepPlan) -> Self {
        RunManifest {
            run_id: plan.run_id(),
            config: plan.base.canonical(),
            warm_start: plan.warm_start,
            points: plan.points().into_iter().map(|p| p.key).collect(),
            completed: BTreeSet::new(),
            failed: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let keys = |it: &mut dyn Iterator<Item = &String>| it.map(|k| json_str(k)).collect::<Vec<_>>().join(",");
        let failed = self
            .failed
            .iter()
            .map(|(k, e)| format!("{{\"key\":{},\"error\":{}}}", json_str(k), json_str(e)))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "{{\"run_id\":{},\"config\":{},\"warm_start\":{},\"layout\":{{\"points\":\"{POINTS_DIR}/<key>.json\",\"csv\":\"{SWEEP_CSV}\",\"timings\":\"{TIMINGS_CSV}\"}},\"points\":[{}],\"completed\":[{}],\"failed\":[{}]}}\n",
            json_str(&self.run_id),
            json_str(&self.config),
            self.warm_start,
            keys(&mut self.points.iter()),
            keys(&mut self.completed.iter()),
            failed,
        )
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let s = |k: &str| v[k].as_str().map(str::to_string).ok_or(format!("manifest lacks `{k}`"));
        let list = |k: &str| -> Result<Vec<String>, String> {
            v[k].as_array()
                .ok_or(format!("manifest lacks `{k}`"))?
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or(format!("bad entry in `{k}`")))
                .collect()
        };
        let mut failed = BTreeMap::new();
        for f in v["failed"].as_array().ok_or("manifest lacks `failed`")? {
            if let (Some(k), Some(e)) = (f["key"].as_str(), f["error"].as_str()) {
                failed.insert(k.to_string(), e.to_string());
            }
        }
        Ok(RunManifest {
            run_id: s("run_id")?,
            config: s("config")?,
            warm_start: v["warm_start"].as_bool().unwrap_or(false),
            points: list("points")?,
            completed: list("completed")?.into_iter().collect(),
            failed,
        })
    }

    pub fn load(dir: &Path) -> Result<Option<Self>, String> {
        match fs::read_to_string(dir.join(MANIFEST)) {
            Ok(text) => RunManifest::from_json(&text).map(Some),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    /// Every point finished, converged and passed its checks.
    Clean,
    /// Some point failed or did not converge.
    Degraded,
    /// Stopped early by `stop_after`.
    Interrupted,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub out: PathBuf,
    pub resume: bool,
    /// Stop after computing this many new points, leaving the run resumable.
    pub stop_after: Option<usize>,
    pub quiet: bool,
}

struct Shared {
    manifest: RunManifest,
    budget: Option<usize>,
    clean: bool,
}

fn point_path(out: &Path, key: &str) -> PathBuf {
    out.join(POINTS_DIR).join(format!("{key}.json"))
}

fn point_json(p: &Point, r: &OptimizationResult, seconds: f64) -> String {
    format!(
        "{{\"key\":{},\"index\":{},\"seconds\":{},\"csv_row\":{},\"result\":{}}}\n",
        json_str(&p.key),
        p.index,
        sci(seconds),
        json_str(&r.csv_row()),
        r.to_json().trim_end(),
    )
}

/// Reads back a stored point: `(csv row, seconds, potential, converged)`.
fn read_point(out: &Path, key: &str) -> Result<(String, f64, PotentialField, bool), String> {
    let text = fs::read_to_string(point_path(out, key)).map_err(|e| format!("{key}: {e}"))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{key}: {e}"))?;
    let row = v["csv_row"].as_str().ok_or(format!("{key}: no csv_row"))?.to_string();
    let seconds = v["seconds"].as_f64().unwrap_or(f64::NAN);
    let potential = PotentialField::from_json(&v["result"]["potential"].to_string()).map_err(|e| e.to_string())?;
    let converged = v["result"]["converged"].as_bool().unwrap_or(false);
    Ok((row, seconds, potential, converged))
}

fn passes_checks(r: &OptimizationResult) -> bool {
    r.converged && r.constraint_defect < 1e-10
}

/// Runs (or resumes) a sweep into `opts.out`.
pub fn run_sweep(plan: &SweepPlan, opts: &SweepOptions) -> Result<SweepStatus, String> {
    let points = plan.points();
    fs::create_dir_all(opts.out.join(POINTS_DIR)).map_err(|e| e.to_string())?;
    let mut manifest = RunManifest::new(plan);
    if opts.resume {
        if let Some(old) = RunManifest::load(&opts.out)? {
            if old.run_id != manifest.run_id {
                return Err(format!(
                    "{} holds run {}, not {}; use a fresh --out",
                    opts.out.display(),
                    old.run_id,
                    manifest.run_id
                ));
            }
            manifest.completed =
                old.completed.into_iter().filter(|k| point_path(&opts.out, k).is_file()).collect();
        }
    }
    write_atomic(&opts.out.join(MANIFEST), &manifest.to_json()).map_err(|e| e.to_string())?;

    let one_bound: HashMap<u64, Option<f64>> = plan
        .gammas
        .iter()
        .map(|&g| (g.to_bits(), one_bound_state_constant(g, plan.base.dim).ok()))
        .collect();
    let shared = Mutex::new(Shared { manifest, budget: opts.stop_after, clean: true });
    let total = points.len();

    // returns the new potential, or None when the budget ran out
    let compute = |p: &Point, start: Option<&PotentialField>| -> Option<Option<PotentialField>> {
        {
            let mut s = shared.lock().unwrap();
            if let Some(b) = s.budget.as_mut() {
                if *b == 0 {
                    return None;
                }
                *b -= 1;
            }
        }
        let t0 = Instant::now();
        let result = optimize_from(&p.config, start, one_bound[&p.config.gamma.to_bits()]);
        let seconds = t0.elapsed().as_secs_f64();
        let mut s = shared.lock().unwrap();
        let potential = match result {
            Ok(r) => {
                if let Err(e) = write_atomic(&point_path(&opts.out, &p.key), &point_json(p, &r, seconds)) {
                    s.manifest.failed.insert(p.key.clone(), e.to_string());
                    s.clean = false;
                    return Some(None);
                }
                if !opts.quiet {
                    eprintln!(
                        "[{}/{total}] gamma={} I={} ratio_sc={} iterations={} converged={} ({seconds:.1}s)",
                        p.index + 1,
                        p.config.gamma,
                        p.config.norm,
                        sci(r.ratio_sc),
                        r.iterations,
                        r.converged
                    );
                }
                s.clean &= passes_checks(&r);
                s.manifest.failed.remove(&p.key);
                s.manifest.completed.insert(p.key.clone());
                Some(r.potential)
            }
            Err(e) => {
                eprintln!("[{}/{total}] gamma={} I={} failed: {e}", p.index + 1, p.config.gamma, p.config.norm);
                s.manifest.failed.insert(p.key.clone(), e.to_string());
                s.clean = false;
                None
            }
        };
        if let Err(e) = write_atomic(&opts.out.join(MANIFEST), &s.manifest.to_json()) {
            eprintln!("cannot update manifest: {e}");
            s.clean = false;
        }
        Some(potential)
    };

    let done = |key: &str| shared.lock().unwrap().manifest.completed.contains(key);
    let interrupted = Mutex::new(false);
    if plan.warm_start {
        let chains: Vec<&[Point]> = points.chunks(plan.norms.len()).collect();
        chains.par_iter().for_each(|chain| {
            let mut previous: Option<PotentialField> = None;
            for p in chain.iter() {
                if done(&p.key) {
                    previous = read_point(&opts.out, &p.key).ok().map(|(_, _, v, _)| v);
                    continue;
                }
                match compute(p, previous.as_ref()) {
                    Some(next) => previous = next,
                    None => {
                        *interrupted.lock().unwrap() = true;
                        return;
                    }
                }
            }
        });
    } else {
        points.par_iter().filter(|p| !done(&p.key)).for_each(|p| {
            if compute(p, None).is_none() {
                *interrupted.lock().unwrap() = true;
            }
        });
    }
    let shared = shared.into_inner().unwrap();
    if interrupted.into_inner().unwrap() {
        return Ok(SweepStatus::Interrupted);
    }

    let mut csv = format!("{CSV_HEADER}\n");
    let mut timings = String::from("index,key,gamma,I,seconds\n");
    let mut clean = shared.clean && shared.manifest.failed.is_empty();
    for p in &points {
        if !shared.manifest.completed.contains(&p.key) {
            clean = false;
            continue;
        }
        let (row, seconds, _, converged) = read_point(&opts.out, &p.key)?;
        clean &= converged;
        csv.push_str(&row);
        csv.push('\n');
        let _ = writeln!(timings, "{},{},{},{},{}", p.index, p.key, sci(p.config.gamma), sci(p.config.norm), sci(seconds));
    }
    write_atomic(&opts.out.join(SWEEP_CSV), &csv).map_err(|e| e.to_string())?;
    write_atomic(&opts.out.join(TIMINGS_CSV), &timings).map_err(|e| e.to_string())?;
    Ok(if clean { SweepStatus::Clean } else { SweepStatus::Degraded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ltlab::LatticeKind;

    fn plan() -> SweepPlan {
        SweepPlan {
            base: ScfConfig::new(LatticeKind::Line, 1.5, 1.0),
            gammas: vec![1.5, 1.8],
            norms: vec![2.0, 3.0, 4.0],
            warm_start: false,
        }
    }

    #[test]
    fn keys_are_distinct_and_stable() {
        let a = plan().points();
        let b = plan().points();
        assert_eq!(a.len(), 6);
        let keys: BTreeSet<_> = a.iter().map(|p| p.key.clone()).collect();
        assert_eq!(keys.len(), 6);
        assert!(a.iter().zip(&b).all(|(x, y)| x.key == y.key));
        assert_eq!(a[4].config.gamma, 1.8);
        assert_eq!(a[4].config.norm, 3.0);
        let warm = SweepPlan { warm_start: true, ..plan() };
        assert_ne!(warm.points()[0].key, a[0].key);
        assert_ne!(warm.run_id(), plan().run_id());
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = RunManifest::new(&plan());
        m.completed.insert(m.points[1].clone());
        m.failed.insert(m.points[2].clone(), "no negative spectrum: \"x\"".into());
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    }
}
