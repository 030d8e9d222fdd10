//! Solver backends: the bundled simplex / branch-and-bound, or an external
//! command that consumes an MPS file and writes `name value` lines.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

use super::lp::{solve_lp, LpOptions, LpStatus};
use super::mip::{solve_mip, MipOptions, MipStatus};
use super::model::StandardFormModel;
use super::mps::write_mps;
use super::solution::SolveStatus;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Bundled,
    /// Shell command; `{mps}` and `{sol}` are replaced by file paths, or the
    /// two paths are appended when the placeholders are absent.
    External { command: String },
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bundled" => Ok(Self::Bundled),
            _ => match s.strip_prefix("cmd:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External { command: cmd.to_string() }),
                _ => Err(Error::Invalid(format!("backend must be \"bundled\" or \"cmd:<command>\", got {s:?}"))),
            },
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Bundled => f.write_str("bundled"),
            Self::External { command } => write!(f, "cmd:{command}"),
        }
    }
}

/// Raw solver answer in model column order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

pub fn solve_model(model: &StandardFormModel, backend: &Backend, time_limit_secs: Option<f64>) -> Result<RawSolution> {
    model.validate()?;
    match backend {
        Backend::Bundled => solve_bundled(model, time_limit_secs),
        Backend::External { command } => solve_external(model, command),
    }
}

fn solve_bundled(model: &StandardFormModel, time_limit_secs: Option<f64>) -> Result<RawSolution> {
    if !model.has_integers() {
        let lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
        let ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
        let s = solve_lp(model, &lb, &ub, &LpOptions::default());
        let status = match s.status {
            LpStatus::Optimal => SolveStatus::Optimal,
            LpStatus::Infeasible => SolveStatus::Infeasible,
            LpStatus::Unbounded => return Err(Error::Solver("LP is unbounded".into())),
            LpStatus::IterationLimit => return Err(Error::Solver("simplex iteration limit reached".into())),
        };
        return Ok(RawSolution { status, values: s.x, objective: s.objective, nodes: 0, lp_iterations: s.iterations });
    }
    let opts = MipOptions { time_limit_secs, ..MipOptions::default() };
    let r = solve_mip(model, &opts);
    let status = match r.status {
        MipStatus::Optimal => SolveStatus::Optimal,
        MipStatus::Infeasible => SolveStatus::Infeasible,
        MipStatus::Unbounded => return Err(Error::Solver("MIP relaxation is unbounded".into())),
        MipStatus::TimeLimit { gap } | MipStatus::NodeLimit { gap } => {
            if !r.has_solution() {
                return Err(Error::Solver("limit reached before any incumbent was found".into()));
            }
            SolveStatus::TimeLimit { gap }
        }
    };
    Ok(RawSolution { status, values: r.x, objective: r.objective, nodes: r.nodes, lp_iterations: r.lp_iterations })
}

static SCRATCH_SEQ: AtomicUsize = AtomicUsize::new(0);

fn scratch_dir() -> Result<PathBuf> {
    let n = SCRATCH_SEQ.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("dcflex-{}-{n}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn solve_external(model: &StandardFormModel, command: &str) -> Result<RawSolution> {
    let dir = scratch_dir()?;
    let mps = dir.join("model.mps");
    let sol = dir.join("model.sol");
    std::fs::write(&mps, write_mps(model)).map_err(|e| Error::io(&mps, e))?;
    let (m, s) = (mps.display().to_string(), sol.display().to_string());
    let line = if command.contains("{mps}") || command.contains("{sol}") {
        command.replace("{mps}", &m).replace("{sol}", &s)
    } else {
        format!("{command} {m} {s}")
    };
    let out = Command::new("sh")
        .arg("-c")
        .arg(&line)
        .output()
        .map_err(|e| Error::Solver(format!("could not launch {line:?}: {e}")))?;
    let log = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    if !out.status.success() {
        return Err(Error::Solver(format!("external solver exited with {}:\n{log}", out.status)));
    }
    let text = std::fs::read_to_string(&sol).map_err(|e| Error::io(&sol, e))?;
    let result = parse_solution_text(model, &text).map_err(|e| Error::Solver(format!("{e}\nsolver log:\n{log}")));
    let _ = std::fs::remove_dir_all(&dir);
    result
}

/// Parses `name value` lines; an optional `status <word>` line reports
/// infeasibility. Lines starting with `#` are ignored.
pub fn parse_solution_text(model: &StandardFormModel, text: &str) -> Result<RawSolution> {
    let index: std::collections::HashMap<&str, usize> =
        model.vars.iter().enumerate().map(|(j, v)| (v.name.as_str(), j)).collect();
    let mut values = vec![f64::NAN; model.n_vars()];
    let mut status = SolveStatus::Optimal;
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            [first, ..] if first.starts_with('#') => {}
            ["status", word] => {
                status = match *word {
                    "optimal" => SolveStatus::Optimal,
                    "infeasible" => SolveStatus::Infeasible,
                    "time_limit" => SolveStatus::TimeLimit { gap: f64::NAN },
                    other => return Err(Error::Parse { line: ln, detail: format!("unknown status {other}") }),
                }
            }
            [name, value] => {
                let j = *index
                    .get(name)
                    .ok_or_else(|| Error::Parse { line: ln, detail: format!("unknown variable {name}") })?;
                values[j] = value
                    .parse()
                    .map_err(|_| Error::Parse { line: ln, detail: format!("bad value {value:?}") })?;
            }
            _ => return Err(Error::Parse { line: ln, detail: "expected `name value`".into() }),
        }
    }
    if status == SolveStatus::Infeasible {
        return Ok(RawSolution { status, values: vec![0.0; model.n_vars()], objective: f64::INFINITY, nodes: 0, lp_iterations: 0 });
    }
    if let Some(j) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Invalid(format!("solution file lacks variable {}", model.vars[j].name)));
    }
    let objective = model.objective_value(&values);
    Ok(RawSolution { status, values, objective, nodes: 0, lp_iterations: 0 })
}

pub fn write_solution_text(model: &StandardFormModel, values: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("status optimal\n");
    for (v, x) in model.vars.iter().zip(values) {
        out.push_str(&format!("{} {x:?}\n", v.name));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::model::Sense;

    #[test]
    fn backend_parsing() {
        assert_eq!("bundled".parse::<Backend>().unwrap(), Backend::Bundled);
        assert_eq!(
            "cmd:python3 solve.py".parse::<Backend>().unwrap(),
            Backend::External { command: "python3 solve.py".into() }
        );
        assert!("cmd:".parse::<Backend>().is_err());
        assert!("gurobi".parse::<Backend>().is_err());
    }

    #[test]
    fn solution_text_round_trip() {
        let mut m = StandardFormModel::new("t");
        let a = m.add_var("a", 0.0, 5.0, false, 1.0);
        m.add_var("b", 0.0, 5.0, false, 2.0);
        m.add_row("r", vec![(a, 1.0)], Sense::Ge, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.sol");
        write_solution_text(&m, &[1.5, 0.25], &p).unwrap();
        let raw = parse_solution_text(&m, &std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(raw.values, vec![1.5, 0.25]);
        assert_eq!(raw.objective, 2.0);
        assert!(parse_solution_text(&m, "a 1\n").is_err());
        assert!(matches!(parse_solution_text(&m, "a 1\nzz 2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[cfg(unix)]
    #[test]
    fn external_command_is_invoked() {
        let mut m = StandardFormModel::new("t");
        m.add_var("a", 1.0, 1.0, false, 3.0);
        let backend = Backend::External { command: "printf 'status optimal\\na 1.0\\n' > {sol} #{mps}".into() };
        let raw = solve_model(&m, &backend, None).unwrap();
        assert_eq!(raw.objective, 3.0);
    }
}
