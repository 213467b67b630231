//! JSON ingestion. Every document is validated before it reaches a computation.

use std::fs;
use std::path::{Path, PathBuf};

use qrf_core::framechange::{FrameChangeScenario, ScenarioJson};
use qrf_core::frames::{FrameJson, QuantumFrame};
use qrf_core::groups::{FiniteGroup, GroupJson};
use qrf_core::operators::{validate, DensityState, Operator, OperatorJson, OperatorKind};
use qrf_core::representations::{RepJson, UnitaryRep};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, Result};

/// A validated input document.
#[derive(Clone, Debug)]
pub enum Input {
    Group(FiniteGroup),
    Rep(UnitaryRep),
    Frame(Box<QuantumFrame>),
    Scenario(Box<FrameChangeScenario>),
    /// Operators whose JSON carries `"kind": "state"` are checked as density matrices.
    State(DensityState),
    Operator(Operator),
}

impl Input {
    pub fn kind(&self) -> &'static str {
        match self {
            Input::Group(_) => "group",
            Input::Rep(_) => "rep",
            Input::Frame(_) => "frame",
            Input::Scenario(_) => "scenario",
            Input::State(_) => "state",
            Input::Operator(_) => "operator",
        }
    }
}

/// Parse and validate each file in order; the first failure aborts.
pub fn parse_inputs<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Input>> {
    paths.iter().map(|p| parse_input(p.as_ref())).collect()
}

pub fn parse_input(path: &Path) -> Result<Input> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| parse_error(path, &e))?;
    let has = |k: &str| value.get(k).is_some();
    if has("frame1") {
        let j: ScenarioJson = typed(path, &text)?;
        let sc = FrameChangeScenario::try_from(j).map_err(|e| core_error(path, e))?;
        Ok(Input::Scenario(Box::new(sc)))
    } else if has("effects") {
        let j: FrameJson = typed(path, &text)?;
        Ok(Input::Frame(Box::new(check_frame(path, j)?)))
    } else if has("matrices") {
        let j: RepJson = typed(path, &text)?;
        Ok(Input::Rep(UnitaryRep::try_from(j).map_err(|e| core_error(path, e))?))
    } else if has("cayley") {
        let j: GroupJson = typed(path, &text)?;
        Ok(Input::Group(FiniteGroup::try_from(j).map_err(|e| core_error(path, e))?))
    } else if has("re") {
        let is_state = value.get("kind").and_then(Value::as_str) == Some("state");
        let j: OperatorJson = typed(path, &text)?;
        let op = Operator::try_from(j).map_err(|e| core_error(path, e))?;
        if !is_state {
            return Ok(Input::Operator(op));
        }
        let v = validate(&op, OperatorKind::State);
        if let Some(bad) = v.violation() {
            return Err(CliError::InvariantViolation {
                path: path.to_path_buf(),
                name: bad.name.clone(),
                residual: bad.residual,
            });
        }
        Ok(Input::State(DensityState::new_unchecked(op)))
    } else {
        Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "unrecognized document: expected a group, rep, frame, scenario or operator".into(),
        })
    }
}

/// Group match, effect validity, normalization, then covariance; first failure wins.
fn check_frame(path: &Path, j: FrameJson) -> Result<QuantumFrame> {
    QuantumFrame::try_from(j).map_err(|e| core_error(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn typed<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_error(path, &e))
}

fn parse_error(path: &Path, e: &serde_json::Error) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() }
}

fn core_error(path: &Path, e: qrf_core::Error) -> CliError {
    match e {
        qrf_core::Error::InvariantViolation { name, residual } => {
            CliError::InvariantViolation { path: PathBuf::from(path), name, residual }
        }
        other => CliError::Core(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrf_core::frames::{canonical_frame, Convention};
    use qrf_core::groups::{make_preset, GroupPreset};

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn z2_frame() -> FrameJson {
        let g = make_preset(GroupPreset::Cyclic(2)).unwrap();
        FrameJson::from(&canonical_frame(&g, Convention::LeftRegular))
    }

    #[test]
    fn frame_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "f.json", &serde_json::to_string_pretty(&z2_frame()).unwrap());
        let inputs = parse_inputs(&[p]).unwrap();
        assert!(matches!(&inputs[0], Input::Frame(f) if f.is_ideal()));
    }

    #[test]
    fn normalization_violation_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let mut j = z2_frame();
        j.effects[0].re[0][0] = 0.5;
        let p = write(dir.path(), "f.json", &serde_json::to_string(&j).unwrap());
        match parse_inputs(&[p]) {
            Err(CliError::InvariantViolation { name, residual, .. }) => {
                assert_eq!(name, "povm_normalization");
                assert!((residual - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn group_mismatch_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let mut j = z2_frame();
        j.group = GroupJson::from(&make_preset(GroupPreset::Cyclic(3)).unwrap());
        let p = write(dir.path(), "f.json", &serde_json::to_string(&j).unwrap());
        assert!(
            matches!(parse_inputs(&[p]), Err(CliError::InvariantViolation { name, .. }) if name == "group_mismatch")
        );
    }

    #[test]
    fn syntax_error_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.json", "{\n  \"order\": 2,\n  \"cayley\": [[0, 1],\n}");
        assert!(matches!(parse_inputs(&[p]), Err(CliError::Parse { line: 4, .. })));
    }

    #[test]
    fn states_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.json", r#"{"kind":"state","dim":2,"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}"#);
        assert!(matches!(parse_inputs(&[p]), Err(CliError::InvariantViolation { name, .. }) if name == "unit_trace"));
        let p = write(dir.path(), "o.json", r#"{"dim":2,"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}"#);
        assert!(matches!(parse_inputs(&[p]).unwrap()[0], Input::Operator(_)));
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(parse_inputs(&["/nonexistent/x.json"]), Err(CliError::Io { .. })));
    }
}
