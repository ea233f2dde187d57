//! Game definition file format and result serialization. One JSON schema
//! with an explicit `kind` discriminator; complex numbers are always
//! two-element [re, im] arrays.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    build_h_from_g, mixed_to_density, payoff_classical, payoff_trace, AbstractGame,
    ClassicalGame, MixedProfile,
};
use crate::linalg::{
    commutation_residual, max_abs, C64, CMatrix, DensityMatrix, NumericPolicy, SpaceShape,
};
use crate::quantum::{
    build_abstract, classify, verify_equivalence, JointRule, OperatorGame,
    QuantumObject,
};

pub const FORMAT_VERSION: u32 = 1;

/// A complex matrix as rows of [re, im] pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn json_to_matrix(j: &JsonMatrix, field: &str) -> Result<CMatrix> {
    let rows = j.len();
    if rows == 0 {
        return Err(Error::InvalidGame {
            field: field.into(),
            reason: "empty matrix".into(),
        });
    }
    let cols = j[0].len();
    if j.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidGame {
            field: field.into(),
            reason: "ragged matrix rows".into(),
        });
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (r, row) in j.iter().enumerate() {
        for (c, &[re, im]) in row.iter().enumerate() {
            m[(r, c)] = C64::new(re, im);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum JsonRule {
    OrderedProduct,
    DirectProduct,
    Custom {
        player_dims: Vec<usize>,
        table: Vec<JsonMatrix>,
    },
}

impl JsonRule {
    fn to_rule(&self) -> Result<JointRule> {
        Ok(match self {
            JsonRule::OrderedProduct => JointRule::OrderedProduct,
            JsonRule::DirectProduct => JointRule::DirectProduct,
            JsonRule::Custom { player_dims, table } => JointRule::Custom {
                player_dims: player_dims.clone(),
                table: table
                    .iter()
                    .enumerate()
                    .map(|(i, m)| json_to_matrix(m, &format!("rule.table[{i}]")))
                    .collect::<Result<Vec<_>>>()?,
            },
        })
    }
}

/// Per-file default solver settings; command-line flags override.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// Assertions a game file documents about itself, runnable via
/// `--self-test` on any subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum SelfTest {
    /// Named players' payoff tensors/operators sum to zero.
    ZeroSum { tol: f64 },
    /// Payoff of one player at a named profile.
    Payoff {
        profile: String,
        player: usize,
        expected: f64,
        tol: f64,
    },
    /// A named profile is an ε-Nash equilibrium.
    Nash { profile: String, epsilon: f64 },
    /// Taxonomy label of the (compiled) payoff operators.
    Classify { expected: String },
    /// Operator game: payoff scale matrices sum to zero.
    PayoffScalesZeroSum { tol: f64 },
    /// Operator game: operator-level vs compiled payoffs agree.
    Equivalence { samples: usize, seed: u64, tol: f64 },
    /// Pairwise commutators of the (compiled) payoff operators vanish.
    Commuting { tol: f64 },
    /// At least one pairwise commutator is genuinely nonzero.
    NonCommuting { min_residual: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub format_version: u32,
    pub kind: String,
    pub players: usize,
    pub dims: Vec<usize>,
    /// Classical payload: one nested real array per player, nesting depth
    /// equal to the player count, shape following `dims`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<serde_json::Value>>,
    /// Abstract payload: one Hermitian joint-space matrix per player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<JsonMatrix>>,
    /// Operator-game payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<JsonRule>,
    /// Per-player operator bases; omitted means the full Q² basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<Vec<Vec<JsonMatrix>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff_scales: Option<Vec<JsonMatrix>>,
    /// Named mixed profiles (per-player probability vectors).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub profiles: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub self_test: Vec<SelfTest>,
}

#[derive(Debug, Clone)]
pub enum ParsedGame {
    Classical(ClassicalGame),
    Abstract(AbstractGame),
    Operator(OperatorGame),
}

#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub file: GameFile,
    pub game: ParsedGame,
}

fn flatten_tensor(v: &serde_json::Value, dims: &[usize], out: &mut Vec<f64>, field: &str) -> Result<()> {
    match dims.split_first() {
        None => match v.as_f64() {
            Some(x) => {
                out.push(x);
                Ok(())
            }
            None => Err(Error::InvalidGame {
                field: field.into(),
                reason: format!("expected a number at depth {}, got {v}", field.matches('[').count()),
            }),
        },
        Some((&d, rest)) => {
            let arr = v.as_array().ok_or_else(|| Error::InvalidGame {
                field: field.into(),
                reason: "expected a nested array".into(),
            })?;
            if arr.len() != d {
                return Err(Error::InvalidGame {
                    field: field.into(),
                    reason: format!("expected {d} entries, got {}", arr.len()),
                });
            }
            for (k, item) in arr.iter().enumerate() {
                flatten_tensor(item, rest, out, &format!("{field}[{k}]"))?;
            }
            Ok(())
        }
    }
}

fn nest_tensor(flat: &[f64], dims: &[usize]) -> serde_json::Value {
    match dims.split_first() {
        None => serde_json::json!(flat[0]),
        Some((&d, rest)) => {
            let chunk = flat.len() / d;
            serde_json::Value::Array(
                (0..d)
                    .map(|k| nest_tensor(&flat[k * chunk..(k + 1) * chunk], rest))
                    .collect(),
            )
        }
    }
}

impl GameFile {
    pub fn validate_and_build(&self, policy: &NumericPolicy) -> Result<ParsedGame> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::GameFile(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.dims.len() != self.players {
            return Err(Error::InvalidGame {
                field: "dims".into(),
                reason: format!(
                    "{} entries for {} players",
                    self.dims.len(),
                    self.players
                ),
            });
        }
        match self.kind.as_str() {
            "classical" => {
                let payoffs = self.payoffs.as_ref().ok_or_else(|| Error::InvalidGame {
                    field: "payoffs".into(),
                    reason: "required for kind = classical".into(),
                })?;
                if payoffs.len() != self.players {
                    return Err(Error::InvalidGame {
                        field: "payoffs".into(),
                        reason: format!("expected {} tensors, got {}", self.players, payoffs.len()),
                    });
                }
                let shape = SpaceShape::new(self.dims.clone())?;
                let mut tensors = Vec::with_capacity(self.players);
                for (i, t) in payoffs.iter().enumerate() {
                    let mut flat = Vec::with_capacity(shape.joint_dim());
                    flatten_tensor(t, &self.dims, &mut flat, &format!("payoffs[{i}]"))?;
                    tensors.push(flat);
                }
                Ok(ParsedGame::Classical(ClassicalGame::new(shape, tensors)?))
            }
            "abstract" => {
                let ops = self.operators.as_ref().ok_or_else(|| Error::InvalidGame {
                    field: "operators".into(),
                    reason: "required for kind = abstract".into(),
                })?;
                let shape = SpaceShape::new(self.dims.clone())?;
                let mats = ops
                    .iter()
                    .enumerate()
                    .map(|(i, m)| json_to_matrix(m, &format!("operators[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ParsedGame::Abstract(AbstractGame::new(shape, mats)?))
            }
            "operator" => {
                let rho0_json = self.rho0.as_ref().ok_or_else(|| Error::InvalidGame {
                    field: "rho0".into(),
                    reason: "required for kind = operator".into(),
                })?;
                let rho0 = DensityMatrix::new(json_to_matrix(rho0_json, "rho0")?, policy)?;
                let object = QuantumObject::new(rho0);
                let rule = self
                    .rule
                    .as_ref()
                    .ok_or_else(|| Error::InvalidGame {
                        field: "rule".into(),
                        reason: "required for kind = operator".into(),
                    })?
                    .to_rule()?;
                let scales_json =
                    self.payoff_scales.as_ref().ok_or_else(|| Error::InvalidGame {
                        field: "payoff_scales".into(),
                        reason: "required for kind = operator".into(),
                    })?;
                let scales = scales_json
                    .iter()
                    .enumerate()
                    .map(|(i, m)| json_to_matrix(m, &format!("payoff_scales[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let game = match &self.bases {
                    Some(bs) => {
                        let bases = bs
                            .iter()
                            .enumerate()
                            .map(|(i, b)| {
                                b.iter()
                                    .enumerate()
                                    .map(|(k, m)| json_to_matrix(m, &format!("bases[{i}][{k}]")))
                                    .collect::<Result<Vec<_>>>()
                            })
                            .collect::<Result<Vec<_>>>()?;
                        OperatorGame::new(object, bases, rule, scales)?
                    }
                    None => OperatorGame::with_full_bases(object, self.players, rule, scales)?,
                };
                // dims must match the declared operator-basis sizes
                for (i, &d) in self.dims.iter().enumerate() {
                    if game.basis(i).len() != d {
                        return Err(Error::InvalidGame {
                            field: "dims".into(),
                            reason: format!(
                                "player {i}: declared {d}, basis has {} elements",
                                game.basis(i).len()
                            ),
                        });
                    }
                }
                Ok(ParsedGame::Operator(game))
            }
            other => Err(Error::InvalidGame {
                field: "kind".into(),
                reason: format!("unknown kind `{other}`"),
            }),
        }
    }

    /// Resolve a named profile; "uniform" is always available.
    pub fn resolve_profile(&self, name: &str, policy: &NumericPolicy) -> Result<MixedProfile> {
        let shape = SpaceShape::new(self.dims.clone())?;
        if name == "uniform" {
            return Ok(MixedProfile::uniform(&shape));
        }
        let probs = self.profiles.get(name).ok_or_else(|| {
            Error::GameFile(format!("no profile named `{name}` in the game file"))
        })?;
        MixedProfile::new(probs.clone(), policy)
    }

    pub fn from_classical(g: &ClassicalGame) -> GameFile {
        GameFile {
            format_version: FORMAT_VERSION,
            kind: "classical".into(),
            players: g.n_players(),
            dims: g.dims().dims().to_vec(),
            payoffs: Some(
                g.tensors()
                    .iter()
                    .map(|t| nest_tensor(t, g.dims().dims()))
                    .collect(),
            ),
            operators: None,
            rho0: None,
            rule: None,
            bases: None,
            payoff_scales: None,
            profiles: BTreeMap::new(),
            solver: None,
            self_test: Vec::new(),
        }
    }

    pub fn from_abstract(g: &AbstractGame) -> GameFile {
        GameFile {
            format_version: FORMAT_VERSION,
            kind: "abstract".into(),
            players: g.n_players(),
            dims: g.dims().dims().to_vec(),
            payoffs: None,
            operators: Some(g.payoff_operators().iter().map(matrix_to_json).collect()),
            rho0: None,
            rule: None,
            bases: None,
            payoff_scales: None,
            profiles: BTreeMap::new(),
            solver: None,
            self_test: Vec::new(),
        }
    }
}

/// Parse and validate a game file, with positioned syntax errors.
pub fn parse_game(path: &Path, policy: &NumericPolicy) -> Result<LoadedGame> {
    let text = fs::read_to_string(path)?;
    let file: GameFile = serde_json::from_str(&text)?;
    let game = file.validate_and_build(policy)?;
    Ok(LoadedGame { file, game })
}

pub fn write_game_file(path: &Path, file: &GameFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Outcome of one self-test assertion.
#[derive(Debug, Clone)]
pub struct SelfTestOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The abstract view of whatever the file holds, for checks expressed on
/// payoff operators.
fn abstract_view(loaded: &LoadedGame) -> Result<AbstractGame> {
    match &loaded.game {
        ParsedGame::Classical(g) => Ok(build_h_from_g(g)),
        ParsedGame::Abstract(a) => Ok(a.clone()),
        ParsedGame::Operator(og) => build_abstract(og),
    }
}

/// Run every documented assertion in the file; deterministic.
pub fn run_self_tests(loaded: &LoadedGame, policy: &NumericPolicy) -> Result<Vec<SelfTestOutcome>> {
    let mut out = Vec::new();
    for t in &loaded.file.self_test {
        let outcome = match t {
            SelfTest::ZeroSum { tol } => {
                let a = abstract_view(loaded)?;
                let mut sum = CMatrix::zeros(a.payoff_operator(0).nrows(), a.payoff_operator(0).ncols());
                for h in a.payoff_operators() {
                    sum += h;
                }
                let res = max_abs(&sum);
                SelfTestOutcome {
                    name: "zero_sum".into(),
                    passed: res <= *tol,
                    detail: format!("max |ΣH^i| = {res:.3e} (tol {tol:.1e})"),
                }
            }
            SelfTest::Payoff {
                profile,
                player,
                expected,
                tol,
            } => {
                let p = loaded.file.resolve_profile(profile, policy)?;
                let e = match &loaded.game {
                    ParsedGame::Classical(g) => payoff_classical(g, &p, *player)?,
                    ParsedGame::Abstract(a) => {
                        payoff_trace(a, &mixed_to_density(&p, policy)?, *player)?
                    }
                    ParsedGame::Operator(og) => {
                        let a = build_abstract(og)?;
                        payoff_trace(&a, &mixed_to_density(&p, policy)?, *player)?
                    }
                };
                SelfTestOutcome {
                    name: format!("payoff[{profile}, player {player}]"),
                    passed: (e - expected).abs() <= *tol,
                    detail: format!("E = {e:.12}, expected {expected} (tol {tol:.1e})"),
                }
            }
            SelfTest::Nash { profile, epsilon } => {
                let p = loaded.file.resolve_profile(profile, policy)?;
                let a = abstract_view(loaded)?;
                let rho = mixed_to_density(&p, policy)?;
                let cert = crate::nash::verify_ne(&a, &rho, *epsilon, policy)?;
                SelfTestOutcome {
                    name: format!("nash[{profile}]"),
                    passed: cert.is_valid(),
                    detail: format!("max gain = {:.3e} (ε = {epsilon:.1e})", cert.max_gain()),
                }
            }
            SelfTest::Classify { expected } => {
                let a = abstract_view(loaded)?;
                let label = classify(&a).to_string();
                SelfTestOutcome {
                    name: "classify".into(),
                    passed: &label == expected,
                    detail: format!("got `{label}`, expected `{expected}`"),
                }
            }
            SelfTest::PayoffScalesZeroSum { tol } => match &loaded.game {
                ParsedGame::Operator(og) => {
                    let q = og.object().dim();
                    let mut sum = CMatrix::zeros(q, q);
                    for i in 0..og.n_players() {
                        sum += og.payoff_scale(i);
                    }
                    let res = max_abs(&sum);
                    SelfTestOutcome {
                        name: "payoff_scales_zero_sum".into(),
                        passed: res <= *tol,
                        detail: format!("max |ΣP^i| = {res:.3e} (tol {tol:.1e})"),
                    }
                }
                _ => SelfTestOutcome {
                    name: "payoff_scales_zero_sum".into(),
                    passed: false,
                    detail: "only meaningful for operator games".into(),
                },
            },
            SelfTest::Equivalence { samples, seed, tol } => match &loaded.game {
                ParsedGame::Operator(og) => {
                    let a = build_abstract(og)?;
                    let dev = verify_equivalence(og, &a, *samples, *seed)?;
                    SelfTestOutcome {
                        name: "equivalence".into(),
                        passed: dev <= *tol,
                        detail: format!("max deviation = {dev:.3e} over {samples} samples (tol {tol:.1e})"),
                    }
                }
                _ => SelfTestOutcome {
                    name: "equivalence".into(),
                    passed: false,
                    detail: "only meaningful for operator games".into(),
                },
            },
            SelfTest::Commuting { tol } => {
                let a = abstract_view(loaded)?;
                let res = commutation_residual(a.payoff_operators())?;
                SelfTestOutcome {
                    name: "commuting".into(),
                    passed: res <= *tol,
                    detail: format!("max commutator entry = {res:.3e} (tol {tol:.1e})"),
                }
            }
            SelfTest::NonCommuting { min_residual } => {
                let a = abstract_view(loaded)?;
                let res = commutation_residual(a.payoff_operators())?;
                SelfTestOutcome {
                    name: "non_commuting".into(),
                    passed: res >= *min_residual,
                    detail: format!("max commutator entry = {res:.3e} (min {min_residual:.1e})"),
                }
            }
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Serialized record of one CLI run. Wall time is recorded here, never on
/// stdout, so repeated runs stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub command: String,
    pub seed: u64,
    pub outputs: serde_json::Value,
    pub wall_time_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use std::io::Write as _;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn matching_pennies_json() -> String {
        serde_json::json!({
            "format_version": 1,
            "kind": "classical",
            "players": 2,
            "dims": [2, 2],
            "payoffs": [
                [[1.0, -1.0], [-1.0, 1.0]],
                [[-1.0, 1.0], [1.0, -1.0]]
            ],
            "profiles": {"mixed": [[0.5, 0.5], [0.5, 0.5]]},
            "self_test": [
                {"check": "zero_sum", "tol": 1e-12},
                {"check": "payoff", "profile": "uniform", "player": 0, "expected": 0.0, "tol": 1e-12},
                {"check": "nash", "profile": "mixed", "epsilon": 1e-9},
                {"check": "classify", "expected": "diagonal"}
            ]
        })
        .to_string()
    }

    #[test]
    fn parse_classical_matches_constructor() {
        let f = write_temp(&matching_pennies_json());
        let loaded = parse_game(f.path(), &policy()).unwrap();
        match &loaded.game {
            ParsedGame::Classical(g) => {
                assert_eq!(g.n_players(), 2);
                assert_eq!(g.tensor(0), &[1.0, -1.0, -1.0, 1.0]);
                assert_eq!(g.tensor(1), &[-1.0, 1.0, 1.0, -1.0]);
            }
            _ => panic!("expected classical"),
        }
    }

    #[test]
    fn self_tests_all_pass_on_matching_pennies() {
        let f = write_temp(&matching_pennies_json());
        let loaded = parse_game(f.path(), &policy()).unwrap();
        let outcomes = run_self_tests(&loaded, &policy()).unwrap();
        assert_eq!(outcomes.len(), 4);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn truncated_file_positions_the_error() {
        let f = write_temp("{\n  \"format_version\": 1,\n  \"kind\": ");
        let err = parse_game(f.path(), &policy()).unwrap_err();
        match err {
            Error::Json { line, .. } => assert!(line >= 3),
            other => panic!("expected positioned JSON error, got {other}"),
        }
    }

    #[test]
    fn wrong_tensor_shape_names_the_field() {
        let text = serde_json::json!({
            "format_version": 1,
            "kind": "classical",
            "players": 2,
            "dims": [2, 2],
            "payoffs": [[[1.0, -1.0]], [[-1.0, 1.0], [1.0, -1.0]]]
        })
        .to_string();
        let f = write_temp(&text);
        let err = parse_game(f.path(), &policy()).unwrap_err();
        match err {
            Error::InvalidGame { field, .. } => assert!(field.starts_with("payoffs[0]")),
            other => panic!("expected named-field error, got {other}"),
        }
    }

    #[test]
    fn abstract_round_trip() {
        let mut rng = generators::seeded_rng(31);
        let shape = SpaceShape::new(vec![2, 2]).unwrap();
        let ops = vec![
            generators::random_hermitian(4, &mut rng),
            generators::random_hermitian(4, &mut rng),
        ];
        let a = AbstractGame::new(shape, ops).unwrap();
        let file = GameFile::from_abstract(&a);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("game.json");
        write_game_file(&path, &file).unwrap();
        let loaded = parse_game(&path, &policy()).unwrap();
        match &loaded.game {
            ParsedGame::Abstract(b) => {
                for i in 0..2 {
                    let diff = a.payoff_operator(i) - b.payoff_operator(i);
                    assert!(max_abs(&diff) <= 1e-15);
                }
            }
            _ => panic!("expected abstract"),
        }
    }

    #[test]
    fn classical_round_trip_exact() {
        let mut rng = generators::seeded_rng(32);
        let shape = SpaceShape::new(vec![2, 3]).unwrap();
        let g = generators::random_classical_game(&shape, &mut rng);
        let file = GameFile::from_classical(&g);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("game.json");
        write_game_file(&path, &file).unwrap();
        let loaded = parse_game(&path, &policy()).unwrap();
        match &loaded.game {
            ParsedGame::Classical(h) => {
                assert_eq!(g.tensors(), h.tensors());
            }
            _ => panic!("expected classical"),
        }
    }

    #[test]
    fn operator_game_parse_and_checks() {
        let (p1, p2) = crate::quantum::penny_flip_scales();
        let text = serde_json::json!({
            "format_version": 1,
            "kind": "operator",
            "players": 2,
            "dims": [4, 4],
            "rho0": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            "rule": {"type": "ordered-product"},
            "payoff_scales": [matrix_to_json(&p1), matrix_to_json(&p2)],
            "self_test": [
                {"check": "payoff_scales_zero_sum", "tol": 1e-12},
                {"check": "equivalence", "samples": 50, "seed": 0, "tol": 1e-9}
            ]
        })
        .to_string();
        let f = write_temp(&text);
        let loaded = parse_game(f.path(), &policy()).unwrap();
        match &loaded.game {
            ParsedGame::Operator(og) => {
                assert_eq!(og.object().dim(), 2);
                assert_eq!(og.basis(0).len(), 4);
                assert!(max_abs(&(og.payoff_scale(0) + og.payoff_scale(1))) == 0.0);
            }
            _ => panic!("expected operator"),
        }
        let outcomes = run_self_tests(&loaded, &policy()).unwrap();
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn unknown_kind_rejected() {
        let text = serde_json::json!({
            "format_version": 1,
            "kind": "mystery",
            "players": 1,
            "dims": [2]
        })
        .to_string();
        let f = write_temp(&text);
        assert!(matches!(
            parse_game(f.path(), &policy()).unwrap_err(),
            Error::InvalidGame { .. }
        ));
    }

    #[test]
    fn run_result_round_trip_lossless() {
        let r = RunResult {
            command: "solve games/matching_pennies.json --method oracle".into(),
            seed: 42,
            outputs: serde_json::json!({
                "certificates": [{"epsilon": 1e-12, "probs": [[0.5, 0.5], [0.5, 0.5]]}]
            }),
            wall_time_ms: 1.25,
        };
        let text = serde_json::to_string(&r).unwrap();
        let back: RunResult = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }
}
