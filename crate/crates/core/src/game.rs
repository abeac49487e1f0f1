//! Two-agent reward matrices, altruism-style reward transforms and
//! leader/follower conflict detection.
//!
//! The row agent prefers cell `(A2, B1)` and the column agent prefers
//! `(A1, B2)`. Each agent picks the action that leads toward its own
//! preferred cell unless its effective reward is strictly higher in the
//! other agent's preferred cell.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stand-in for a catastrophic (`-inf`) reward.
pub const DEFAULT_SENTINEL: f64 = -1.0e9;

/// Iteration budget for [`augmented_fixed_point`].
pub const DEFAULT_FIXED_POINT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentId {
    Row,
    Col,
}

impl AgentId {
    pub fn other(self) -> AgentId {
        match self {
            AgentId::Row => AgentId::Col,
            AgentId::Col => AgentId::Row,
        }
    }
}

/// Row actions are `A1`/`A2`, column actions `B1`/`B2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    A1,
    A2,
    B1,
    B2,
}

impl Action {
    /// Action leading toward `agent`'s own preferred cell.
    pub fn aggressive(agent: AgentId) -> Action {
        match agent {
            AgentId::Row => Action::A2,
            AgentId::Col => Action::B2,
        }
    }

    pub fn passive(agent: AgentId) -> Action {
        match agent {
            AgentId::Row => Action::A1,
            AgentId::Col => Action::B1,
        }
    }

    pub fn agent(self) -> AgentId {
        match self {
            Action::A1 | Action::A2 => AgentId::Row,
            Action::B1 | Action::B2 => AgentId::Col,
        }
    }

    pub fn is_aggressive(self) -> bool {
        matches!(self, Action::A2 | Action::B2)
    }

    /// Row or column index of this action in the matrix.
    pub fn index(self) -> usize {
        match self {
            Action::A1 | Action::B1 => 0,
            Action::A2 | Action::B2 => 1,
        }
    }

    /// The action the other agent takes in the cell this agent is steering to.
    pub fn expected_response(self) -> Action {
        match self {
            Action::A2 => Action::B1,
            Action::A1 => Action::B2,
            Action::B2 => Action::A1,
            Action::B1 => Action::A2,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Rewards received by the row and column agent in one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct RewardPair {
    pub row: f64,
    pub col: f64,
}

impl RewardPair {
    pub const fn new(row: f64, col: f64) -> Self {
        RewardPair { row, col }
    }

    pub fn get(&self, agent: AgentId) -> f64 {
        match agent {
            AgentId::Row => self.row,
            AgentId::Col => self.col,
        }
    }

    fn swapped(self) -> Self {
        RewardPair::new(self.col, self.row)
    }
}

impl From<[f64; 2]> for RewardPair {
    fn from(v: [f64; 2]) -> Self {
        RewardPair::new(v[0], v[1])
    }
}

impl From<RewardPair> for [f64; 2] {
    fn from(p: RewardPair) -> Self {
        [p.row, p.col]
    }
}

/// 2x2 game, `cells[row_action][col_action]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardMatrix {
    pub cells: [[RewardPair; 2]; 2],
}

impl RewardMatrix {
    pub fn new(cells: [[(f64, f64); 2]; 2]) -> Self {
        let c = |i: usize, j: usize| RewardPair::new(cells[i][j].0, cells[i][j].1);
        RewardMatrix {
            cells: [[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]],
        }
    }

    /// Decelerate/lane-change vs give-way/continue with catastrophic diagonal.
    pub fn motivating_example(sentinel: f64) -> Self {
        RewardMatrix::new([[(sentinel, sentinel), (0.0, 1.0)], [(1.0, 0.0), (sentinel, sentinel)]])
    }

    /// The matrix driving the lane-change experiments: diagonal `(-1, -1)`.
    pub fn lane_change() -> Self {
        RewardMatrix::new([[(-1.0, -1.0), (0.0, 1.0)], [(1.0, 0.0), (-1.0, -1.0)]])
    }

    /// A valid matrix whose gaps are exactly `(a, b)`.
    pub fn from_gaps(a: f64, b: f64) -> Self {
        RewardMatrix::new([[(-1.0, -1.0), (0.0, b)], [(a, 0.0), (-1.0, -1.0)]])
    }

    pub fn cell(&self, row: Action, col: Action) -> RewardPair {
        debug_assert_eq!(row.agent(), AgentId::Row);
        debug_assert_eq!(col.agent(), AgentId::Col);
        self.cells[row.index()][col.index()]
    }

    /// Row agent's preferred cell `(A2, B1)`.
    pub fn row_preferred(&self) -> RewardPair {
        self.cells[1][0]
    }

    /// Column agent's preferred cell `(A1, B2)`.
    pub fn col_preferred(&self) -> RewardPair {
        self.cells[0][1]
    }

    /// Swaps the agents' roles: the column agent becomes the row agent.
    pub fn transposed(&self) -> Self {
        let c = &self.cells;
        RewardMatrix {
            cells: [
                [c[0][0].swapped(), c[1][0].swapped()],
                [c[0][1].swapped(), c[1][1].swapped()],
            ],
        }
    }

    pub fn map(&self, f: impl Fn(RewardPair) -> RewardPair) -> Self {
        let c = &self.cells;
        RewardMatrix {
            cells: [[f(c[0][0]), f(c[0][1])], [f(c[1][0]), f(c[1][1])]],
        }
    }

    pub fn validate(self) -> Result<ValidatedMatrix> {
        validate_matrix(self)
    }

    /// Parses `{"cells": [[[r, c], ...], ...], "sentinel": -1e9}` where any
    /// reward may be the string `"-inf"`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        doc.into_matrix()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDocument {
    cells: [[[JsonReward; 2]; 2]; 2],
    #[serde(default)]
    sentinel: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonReward {
    Number(f64),
    Text(String),
}

impl MatrixDocument {
    fn into_matrix(self) -> Result<RewardMatrix> {
        let sentinel = self.sentinel.unwrap_or(DEFAULT_SENTINEL);
        if !sentinel.is_finite() {
            return Err(Error::InvalidInput("sentinel must be finite".into()));
        }
        let value = |r: &JsonReward| -> Result<f64> {
            match r {
                JsonReward::Number(x) if x.is_finite() => Ok(*x),
                JsonReward::Number(x) => Err(Error::InvalidInput(format!("non-finite reward {x}"))),
                JsonReward::Text(s) if s.trim() == "-inf" => Ok(sentinel),
                JsonReward::Text(s) => Err(Error::InvalidInput(format!("unrecognised reward {s:?}"))),
            }
        };
        let mut cells = [[(0.0, 0.0); 2]; 2];
        for (i, row) in self.cells.iter().enumerate() {
            for (j, pair) in row.iter().enumerate() {
                cells[i][j] = (value(&pair[0])?, value(&pair[1])?);
            }
        }
        Ok(RewardMatrix::new(cells))
    }
}

/// A matrix whose preferred cells are unambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidatedMatrix(RewardMatrix);

impl ValidatedMatrix {
    pub fn matrix(&self) -> &RewardMatrix {
        &self.0
    }

    pub fn transposed(&self) -> ValidatedMatrix {
        ValidatedMatrix(self.0.transposed())
    }
}

impl std::ops::Deref for ValidatedMatrix {
    type Target = RewardMatrix;

    fn deref(&self) -> &RewardMatrix {
        &self.0
    }
}

/// Checks that `(A2, B1)` is strictly best for the row agent and `(A1, B2)`
/// strictly best for the column agent.
pub fn validate_matrix(m: RewardMatrix) -> Result<ValidatedMatrix> {
    let c = &m.cells;
    for (i, row) in c.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if !p.row.is_finite() || !p.col.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "cell ({}, {}) holds a non-finite reward",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let r211 = c[1][0].row;
    let r122 = c[0][1].col;
    let checks = [
        (r211 > c[0][1].row, "r211 > r121"),
        (r211 > c[0][0].row, "r211 > r111"),
        (r211 > c[1][1].row, "r211 > r221"),
        (r122 > c[1][0].col, "r122 > r212"),
        (r122 > c[0][0].col, "r122 > r112"),
        (r122 > c[1][1].col, "r122 > r222"),
    ];
    for (ok, what) in checks {
        if !ok {
            return Err(Error::AmbiguousPreference(what.to_string()));
        }
    }
    Ok(ValidatedMatrix(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Baseline,
    PureAltruism,
    Altruism,
    AugmentedAltruism,
    Svo,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Baseline,
        ModelKind::PureAltruism,
        ModelKind::Altruism,
        ModelKind::AugmentedAltruism,
        ModelKind::Svo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::PureAltruism => "pure-altruism",
            ModelKind::Altruism => "altruism",
            ModelKind::AugmentedAltruism => "augmented-altruism",
            ModelKind::Svo => "svo",
        }
    }

    /// Builds a model of this kind from per-agent coefficients; `Baseline`
    /// ignores them.
    pub fn with_coeffs(self, c1: f64, c2: f64) -> SocialModel {
        match self {
            ModelKind::Baseline => SocialModel::Baseline,
            ModelKind::PureAltruism => SocialModel::PureAltruism { alpha1: c1, alpha2: c2 },
            ModelKind::Altruism => SocialModel::Altruism { alpha1: c1, alpha2: c2 },
            ModelKind::AugmentedAltruism => SocialModel::AugmentedAltruism { alpha1: c1, alpha2: c2 },
            ModelKind::Svo => SocialModel::Svo { theta1: c1, theta2: c2 },
        }
    }

    /// Upper end of each coefficient's range: 1 for altruism variants, pi/2 for SVO.
    pub fn coefficient_span(self) -> f64 {
        match self {
            ModelKind::Svo => std::f64::consts::FRAC_PI_2,
            _ => 1.0,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "baseline" | "stackelberg" => Ok(ModelKind::Baseline),
            "pure-altruism" | "pure" => Ok(ModelKind::PureAltruism),
            "altruism" => Ok(ModelKind::Altruism),
            "augmented-altruism" | "aug-altruism" | "augmented" | "aug" => Ok(ModelKind::AugmentedAltruism),
            "svo" => Ok(ModelKind::Svo),
            other => Err(Error::InvalidInput(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Decision model together with each agent's coefficient. Index 1 is the
/// row agent, index 2 the column agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SocialModel {
    Baseline,
    PureAltruism { alpha1: f64, alpha2: f64 },
    Altruism { alpha1: f64, alpha2: f64 },
    AugmentedAltruism { alpha1: f64, alpha2: f64 },
    Svo { theta1: f64, theta2: f64 },
}

impl SocialModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SocialModel::Baseline => ModelKind::Baseline,
            SocialModel::PureAltruism { .. } => ModelKind::PureAltruism,
            SocialModel::Altruism { .. } => ModelKind::Altruism,
            SocialModel::AugmentedAltruism { .. } => ModelKind::AugmentedAltruism,
            SocialModel::Svo { .. } => ModelKind::Svo,
        }
    }

    pub fn coeffs(&self) -> Option<(f64, f64)> {
        match *self {
            SocialModel::Baseline => None,
            SocialModel::PureAltruism { alpha1, alpha2 }
            | SocialModel::Altruism { alpha1, alpha2 }
            | SocialModel::AugmentedAltruism { alpha1, alpha2 } => Some((alpha1, alpha2)),
            SocialModel::Svo { theta1, theta2 } => Some((theta1, theta2)),
        }
    }

    /// Same model with the agents' coefficients exchanged.
    pub fn swapped(&self) -> SocialModel {
        match self.coeffs() {
            None => *self,
            Some((c1, c2)) => self.kind().with_coeffs(c2, c1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn unit(name: &'static str, value: f64) -> Result<()> {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(Error::CoefficientOutOfRange {
                    name,
                    value,
                    domain: "[0, 1]",
                })
            }
        }
        fn angle(name: &'static str, value: f64) -> Result<()> {
            if (0.0..=std::f64::consts::FRAC_PI_2).contains(&value) {
                Ok(())
            } else {
                Err(Error::CoefficientOutOfRange {
                    name,
                    value,
                    domain: "[0, pi/2]",
                })
            }
        }
        match *self {
            SocialModel::Baseline => Ok(()),
            SocialModel::PureAltruism { alpha1, alpha2 } | SocialModel::Altruism { alpha1, alpha2 } => {
                unit("alpha1", alpha1)?;
                unit("alpha2", alpha2)
            }
            SocialModel::AugmentedAltruism { alpha1, alpha2 } => {
                unit("alpha1", alpha1)?;
                unit("alpha2", alpha2)?;
                if alpha1 * alpha2 >= 1.0 {
                    return Err(Error::DegenerateCoefficients);
                }
                Ok(())
            }
            SocialModel::Svo { theta1, theta2 } => {
                angle("theta1", theta1)?;
                angle("theta2", theta2)
            }
        }
    }

    /// Effective `(row, col)` rewards for a single cell. Coefficients are
    /// assumed valid.
    pub fn transform(&self, r1: f64, r2: f64) -> (f64, f64) {
        match *self {
            SocialModel::Baseline => (r1, r2),
            SocialModel::PureAltruism { alpha1, alpha2 } => (r1 + alpha1 * r2, r2 + alpha2 * r1),
            SocialModel::Altruism { alpha1, alpha2 } => {
                ((1.0 - alpha1) * r1 + alpha1 * r2, (1.0 - alpha2) * r2 + alpha2 * r1)
            }
            SocialModel::AugmentedAltruism { alpha1, alpha2 } => augmented_closed_form(r1, r2, alpha1, alpha2),
            SocialModel::Svo { theta1, theta2 } => (
                theta1.cos() * r1 + theta1.sin() * r2,
                theta2.cos() * r2 + theta2.sin() * r1,
            ),
        }
    }
}

/// Steady state of the mutually iterated altruistic update.
pub fn augmented_closed_form(r1: f64, r2: f64, alpha1: f64, alpha2: f64) -> (f64, f64) {
    let denom = 1.0 - alpha1 * alpha2;
    (
        ((1.0 - alpha1) * r1 + alpha1 * (1.0 - alpha2) * r2) / denom,
        ((1.0 - alpha2) * r2 + alpha2 * (1.0 - alpha1) * r1) / denom,
    )
}

pub fn effective_rewards(model: &SocialModel, m: &RewardMatrix) -> Result<RewardMatrix> {
    model.validate()?;
    Ok(m.map(|p| {
        let (row, col) = model.transform(p.row, p.col);
        RewardPair::new(row, col)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub r1: f64,
    pub r2: f64,
    pub iterations: u64,
}

/// Iterates `r1 <- (1-a1) r1 + a1 r2_prev`, `r2 <- (1-a2) r2 + a2 r1_prev`
/// from the raw rewards until successive iterates differ by less than `tol`.
pub fn augmented_fixed_point(r1: f64, r2: f64, alpha1: f64, alpha2: f64, tol: f64) -> Result<FixedPoint> {
    augmented_fixed_point_with_budget(r1, r2, alpha1, alpha2, tol, DEFAULT_FIXED_POINT_BUDGET)
}

pub fn augmented_fixed_point_with_budget(
    r1: f64,
    r2: f64,
    alpha1: f64,
    alpha2: f64,
    tol: f64,
    budget: u64,
) -> Result<FixedPoint> {
    SocialModel::AugmentedAltruism { alpha1, alpha2 }.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let (own1, own2) = ((1.0 - alpha1) * r1, (1.0 - alpha2) * r2);
    let (mut x1, mut x2) = (r1, r2);
    for k in 1..=budget {
        let n1 = own1 + alpha1 * x2;
        let n2 = own2 + alpha2 * x1;
        let diff = (n1 - x1).abs().max((n2 - x2).abs());
        x1 = n1;
        x2 = n2;
        if diff < tol {
            return Ok(FixedPoint {
                r1: x1,
                r2: x2,
                iterations: k,
            });
        }
    }
    Err(Error::NonConvergence { iterations: budget })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    AgreementRowYields,
    AgreementColYields,
    BothAggressive,
    BothPassive,
}

impl Category {
    pub fn is_conflict(self) -> bool {
        matches!(self, Category::BothAggressive | Category::BothPassive)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub row_choice: Action,
    pub col_choice: Action,
    pub conflict: bool,
    pub category: Category,
}

/// Ties resolve to the aggressive action.
pub fn decide(model: &SocialModel, m: &ValidatedMatrix, agent: AgentId) -> Result<Action> {
    model.validate()?;
    Ok(decide_unchecked(model, m, agent))
}

fn decide_unchecked(model: &SocialModel, m: &RewardMatrix, agent: AgentId) -> Action {
    let own = |p: RewardPair| {
        let (row, col) = model.transform(p.row, p.col);
        match agent {
            AgentId::Row => row,
            AgentId::Col => col,
        }
    };
    let (mine, theirs) = match agent {
        AgentId::Row => (m.row_preferred(), m.col_preferred()),
        AgentId::Col => (m.col_preferred(), m.row_preferred()),
    };
    if own(mine) >= own(theirs) {
        Action::aggressive(agent)
    } else {
        Action::passive(agent)
    }
}

/// Conflict predicate for hot loops; the model must already be valid.
pub(crate) fn conflict_unchecked(model: &SocialModel, m: &RewardMatrix) -> bool {
    decide_unchecked(model, m, AgentId::Row).is_aggressive() == decide_unchecked(model, m, AgentId::Col).is_aggressive()
}

pub fn detect_conflict(model: &SocialModel, m: &ValidatedMatrix) -> Result<DecisionOutcome> {
    model.validate()?;
    let row_choice = decide_unchecked(model, m, AgentId::Row);
    let col_choice = decide_unchecked(model, m, AgentId::Col);
    let category = match (row_choice.is_aggressive(), col_choice.is_aggressive()) {
        (true, true) => Category::BothAggressive,
        (false, false) => Category::BothPassive,
        (true, false) => Category::AgreementColYields,
        (false, true) => Category::AgreementRowYields,
    };
    Ok(DecisionOutcome {
        row_choice,
        col_choice,
        conflict: category.is_conflict(),
        category,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn lane() -> ValidatedMatrix {
        RewardMatrix::lane_change().validate().unwrap()
    }

    #[test]
    fn reference_matrices_validate() {
        assert!(RewardMatrix::motivating_example(DEFAULT_SENTINEL).validate().is_ok());
        assert!(RewardMatrix::lane_change().validate().is_ok());
    }

    #[test]
    fn strict_inequality_required() {
        let m = RewardMatrix::new([[(-1.0, -1.0), (1.0, 1.0)], [(1.0, 0.0), (-1.0, -1.0)]]);
        assert_eq!(
            m.validate().unwrap_err(),
            Error::AmbiguousPreference("r211 > r121".into())
        );
        let m = RewardMatrix::new([[(-1.0, 2.0), (0.0, 1.0)], [(1.0, 0.0), (-1.0, -1.0)]]);
        assert_eq!(
            m.validate().unwrap_err(),
            Error::AmbiguousPreference("r122 > r112".into())
        );
    }

    #[test]
    fn json_with_inf_cells() {
        let text = r#"{"cells": [[["-inf", "-inf"], [0, 1]], [[1, 0], ["-inf", "-inf"]]], "sentinel": -1e6}"#;
        let m = RewardMatrix::from_json_str(text).unwrap();
        assert_eq!(m, RewardMatrix::motivating_example(-1e6));
        let text = r#"{"cells": [[["-inf", "-inf"], [0, 1]], [[1, 0], ["-inf", "-inf"]]]}"#;
        let m = RewardMatrix::from_json_str(text).unwrap();
        assert_eq!(m, RewardMatrix::motivating_example(DEFAULT_SENTINEL));
        assert!(RewardMatrix::from_json_str(r#"{"cells": [[1, 2]]}"#).is_err());
        assert!(RewardMatrix::from_json_str(r#"{"cells": [[["x", 0], [0, 1]], [[1, 0], [0, 0]]]}"#).is_err());
    }

    #[test]
    fn altruism_zero_is_identity() {
        let m = RewardMatrix::lane_change();
        let e = effective_rewards(
            &SocialModel::Altruism {
                alpha1: 0.0,
                alpha2: 0.0,
            },
            &m,
        )
        .unwrap();
        assert_eq!(e, m);
    }

    #[test]
    fn augmented_half_half_cell() {
        let (a, b) = SocialModel::AugmentedAltruism {
            alpha1: 0.5,
            alpha2: 0.5,
        }
        .transform(1.0, 0.0);
        let fp = augmented_fixed_point(1.0, 0.0, 0.5, 0.5, 1e-13).unwrap();
        assert!((a - fp.r1).abs() < 1e-9 && (b - fp.r2).abs() < 1e-9);
        assert!((a - 2.0 / 3.0).abs() < 1e-12 && (b - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn svo_quarter_pi_cell() {
        let (a, b) = SocialModel::Svo {
            theta1: FRAC_PI_4,
            theta2: FRAC_PI_4,
        }
        .transform(1.0, 0.0);
        assert!((a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12 && (b - a).abs() < 1e-12);
    }

    #[test]
    fn degenerate_augmented_rejected() {
        let m = RewardMatrix::lane_change();
        let model = SocialModel::AugmentedAltruism {
            alpha1: 1.0,
            alpha2: 1.0,
        };
        assert_eq!(
            effective_rewards(&model, &m).unwrap_err(),
            Error::DegenerateCoefficients
        );
        assert!(SocialModel::AugmentedAltruism {
            alpha1: 1.0,
            alpha2: 0.5
        }
        .validate()
        .is_ok());
        assert!(SocialModel::Altruism {
            alpha1: 1.2,
            alpha2: 0.0
        }
        .validate()
        .is_err());
        assert!(SocialModel::Svo {
            theta1: -0.1,
            theta2: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn fixed_point_cases() {
        let fp = augmented_fixed_point(1.0, 0.0, 0.0, 0.0, 1e-12).unwrap();
        assert_eq!((fp.r1, fp.r2, fp.iterations), (1.0, 0.0, 1));

        let fp = augmented_fixed_point(1.0, 0.0, 0.99, 0.99, 1e-13).unwrap();
        let (c1, c2) = augmented_closed_form(1.0, 0.0, 0.99, 0.99);
        assert!((fp.r1 - c1).abs() < 1e-9 && (fp.r2 - c2).abs() < 1e-9);
        assert!(fp.iterations > 100);

        assert_eq!(
            augmented_fixed_point_with_budget(1.0, 0.0, 0.99, 0.99, 1e-13, 10).unwrap_err(),
            Error::NonConvergence { iterations: 10 }
        );
        assert!(augmented_fixed_point(1.0, 0.0, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn decisions_on_lane_change_matrix() {
        let m = lane();
        assert_eq!(decide(&SocialModel::Baseline, &m, AgentId::Row).unwrap(), Action::A2);
        let alt = SocialModel::Altruism {
            alpha1: 0.99,
            alpha2: 0.0,
        };
        assert_eq!(decide(&alt, &m, AgentId::Row).unwrap(), Action::A1);
        let svo = SocialModel::Svo {
            theta1: FRAC_PI_4,
            theta2: FRAC_PI_4,
        };
        assert_eq!(decide(&svo, &m, AgentId::Row).unwrap(), Action::A2);
        assert_eq!(decide(&svo, &m, AgentId::Col).unwrap(), Action::B2);
    }

    #[test]
    fn exact_tie_is_aggressive() {
        // Altruism at alpha = 0.5 on the lane-change matrix gives 0.5 vs 0.5.
        let m = lane();
        let model = SocialModel::Altruism {
            alpha1: 0.5,
            alpha2: 0.5,
        };
        let out = detect_conflict(&model, &m).unwrap();
        assert_eq!(out.category, Category::BothAggressive);
    }

    #[test]
    fn conflict_categories() {
        let fig = RewardMatrix::motivating_example(DEFAULT_SENTINEL).validate().unwrap();
        let out = detect_conflict(&SocialModel::Baseline, &fig).unwrap();
        assert_eq!((out.row_choice, out.col_choice), (Action::A2, Action::B2));
        assert_eq!(out.category, Category::BothAggressive);

        let m = lane();
        let out = detect_conflict(
            &SocialModel::Altruism {
                alpha1: 0.51,
                alpha2: 0.51,
            },
            &m,
        )
        .unwrap();
        assert_eq!(out.category, Category::BothPassive);
        assert!(out.conflict);

        let out = detect_conflict(
            &SocialModel::Altruism {
                alpha1: 0.0,
                alpha2: 0.99,
            },
            &m,
        )
        .unwrap();
        assert_eq!((out.row_choice, out.col_choice), (Action::A2, Action::B1));
        assert_eq!(out.category, Category::AgreementColYields);
        assert!(!out.conflict);
    }

    #[test]
    fn transpose_moves_preferred_cells() {
        let m = RewardMatrix::new([[(-1.0, -2.0), (0.5, 3.0)], [(2.0, 0.25), (-3.0, -4.0)]]);
        let t = m.transposed();
        assert_eq!(t.row_preferred().row, m.col_preferred().col);
        assert_eq!(t.col_preferred().col, m.row_preferred().row);
        assert!(t.validate().is_ok());
        assert_eq!(t.transposed(), m);
    }

    #[test]
    fn kind_parsing() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert_eq!("aug".parse::<ModelKind>().unwrap(), ModelKind::AugmentedAltruism);
        assert!("nope".parse::<ModelKind>().is_err());
    }
}
