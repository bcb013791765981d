use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use ltlab::scf::ScfConfig;
use ltlab::LatticeKind;

/// Splices `key = value` lines from a `--config FILE` into the argument list,
/// right after the subcommand, so explicit flags (which come later) win.
///
/// Blank lines and `#` comments are skipped. `key = true` becomes a bare `--key`,
/// `key = false` is dropped.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let p = it.next().ok_or("--config needs a file argument")?;
            path = Some(PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match value {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
        }
    }
    // the subcommand is the first non-flag token after the program name
    let at = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map_or(rest.len(), |i| i + 2);
    rest.splice(at.min(rest.len())..at.min(rest.len()), injected);
    Ok(rest)
}

/// A list of values given as `a`, `a,b,c` or `start:stop:step` (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid)
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, b, h] => {
                let (a, b, h) = (num(a)?, num(b)?, num(h)?);
                if !(h > 0.0) || b < a {
                    return Err(format!("bad range `{item}`"));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                for i in 0..=n {
                    // round away accumulated binary noise so keys stay stable
                    let x = a + i as f64 * h;
                    out.push(format!("{x:.10e}").parse().unwrap());
                }
            }
            _ => return Err(format!("bad list item `{item}`")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Flags shared by every command that builds an optimization problem.
#[derive(Args, Debug, Clone, Default)]
pub struct ProblemArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// line, square, triangular or honeycomb
    #[arg(long)]
    pub lattice: Option<LatticeKind>,
    /// Number of bands K
    #[arg(long)]
    pub bands: Option<usize>,
    /// Cell grid points per axis
    #[arg(long)]
    pub nc: Option<usize>,
    /// Brillouin-zone points per axis
    #[arg(long)]
    pub nb: Option<usize>,
    /// Plane-wave energy cutoff
    #[arg(long)]
    pub ecut: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Width of the initial Gaussian wells
    #[arg(long)]
    pub width: Option<f64>,
    /// Relative noise on the initial wells
    #[arg(long)]
    pub noise: Option<f64>,
    /// Linear mixing weight (default: bare iteration)
    #[arg(long)]
    pub mixing: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ProblemArgs {
    pub fn config(&self, gamma: f64, norm: f64) -> Result<ScfConfig, String> {
        let kind = self.lattice.ok_or("--lattice is required")?;
        let base = ScfConfig::new(kind, gamma, norm);
        let cfg = ScfConfig {
            dim: self.dim.unwrap_or(base.dim),
            bands: self.bands.unwrap_or(base.bands),
            n_c: self.nc.unwrap_or(base.n_c),
            n_b: self.nb.unwrap_or(base.n_b),
            ecut: self.ecut.or(base.ecut),
            tol: self.tol.unwrap_or(base.tol),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            width: self.width.unwrap_or(base.width),
            noise: self.noise.unwrap_or(base.noise),
            mixing: self.mixing.or(base.mixing),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("2:5:1").unwrap(), vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_grid("1.1:1.3:0.1").unwrap(), vec![1.1, 1.2, 1.3]);
        assert_eq!(parse_grid("3, 1.5").unwrap(), vec![3.0, 1.5]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn config_lines_go_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("ltlab-args-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "# sweep\ngamma = 1.5\nmax_iter=7\nresume = true\nwarm-start = false\n").unwrap();
        let args: Vec<OsString> =
            ["lt-lab", "sweep", "--config", path.to_str().unwrap(), "--gamma", "1.2"].iter().map(OsString::from).collect();
        let out: Vec<String> = expand_config(args).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(out, ["lt-lab", "sweep", "--gamma", "1.5", "--max-iter", "7", "--resume", "--gamma", "1.2"]);
        fs::remove_dir_all(dir).unwrap();
    }
}
