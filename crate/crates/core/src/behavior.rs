//! Prior policies and rewards built from a small set of named primitives.
//!
//! A generated function is a [`BehaviorSpec`]: a policy is a sum of force
//! terms clamped to the actuator bound, a reward is a conjunction of
//! conditions returning 0 or 1. The primitives mirror the forces and
//! conditions the function generator is allowed to name.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::swarm::RobotState;

/// Acceptance radius for the weighted-centroid exploration condition (meters).
pub const CENTROID_DELTA: f64 = 0.05;

/// Time in which the attraction term aims to close the target offset.
pub const ATTRACT_TIME: f64 = 1.0;

/// Relative state of one sensed neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborView {
    /// `p_j - p_i`
    pub rel_p: Vec2,
    /// `v_j - v_i`
    pub rel_v: Vec2,
}

/// Structured form of one robot's observation, i.e. what a generated
/// function may read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalView {
    pub state: RobotState,
    pub inside_region: bool,
    /// Distance to the nearest sensed neighbor, capped at `r_sense`.
    pub min_neighbor_distance: f64,
    /// Nearest first, at most `n_hn`.
    pub neighbors: Vec<NeighborView>,
    /// `p_t - p_i` for the selected target cell.
    pub target: Vec2,
    /// Relative positions of sensed unoccupied cells, nearest first, at most `n_hc`.
    pub cells: Vec<Vec2>,
    pub r_sense: f64,
    pub r_avoid: f64,
    pub f_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Policy,
    Reward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combine {
    #[serde(rename = "sum")]
    Sum,
    #[serde(rename = "all-of")]
    AllOf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ForcePrimitive {
    AttractTarget,
    RepelNeighbors,
    SyncVelocity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionPrimitive {
    InsideRegion,
    CollisionFree,
    ExplorationDone,
}

impl ForcePrimitive {
    pub const ALL: [ForcePrimitive; 3] = [
        ForcePrimitive::AttractTarget,
        ForcePrimitive::RepelNeighbors,
        ForcePrimitive::SyncVelocity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForcePrimitive::AttractTarget => "attract_target",
            ForcePrimitive::RepelNeighbors => "repel_neighbors",
            ForcePrimitive::SyncVelocity => "sync_velocity",
        }
    }
}

impl ConditionPrimitive {
    pub const ALL: [ConditionPrimitive; 3] = [
        ConditionPrimitive::InsideRegion,
        ConditionPrimitive::CollisionFree,
        ConditionPrimitive::ExplorationDone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionPrimitive::InsideRegion => "inside_region",
            ConditionPrimitive::CollisionFree => "collision_free",
            ConditionPrimitive::ExplorationDone => "exploration_done",
        }
    }
}

impl fmt::Display for ForcePrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for ConditionPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn allowed_primitives() -> String {
    ForcePrimitive::ALL
        .iter()
        .map(|p| p.name())
        .chain(ConditionPrimitive::ALL.iter().map(|p| p.name()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One additive force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceTerm {
    pub primitive: ForcePrimitive,
    pub gain: f64,
    /// Interaction length in meters; must lie in `(0, r_sense]`.
    pub range: f64,
}

/// One conjunct of a reward.
///
/// `threshold` is primitive specific: the required clearance as a multiple of
/// `r_avoid` for `collision_free`, the centroid acceptance radius in meters
/// for `exploration_done`, and ignored by `inside_region`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionTerm {
    pub primitive: ConditionPrimitive,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Terms {
    Force(Vec<ForceTerm>),
    Condition(Vec<ConditionTerm>),
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("unknown primitive {name:?}; allowed primitives: {allowed}")]
    UnknownPrimitive { name: String, allowed: String },
    #[error("primitive {name} does not belong in a {kind:?} spec")]
    WrongKind { name: String, kind: SpecKind },
    #[error("{kind:?} spec must combine with {expected:?}")]
    WrongCombine { kind: SpecKind, expected: Combine },
    #[error("term {index} ({name}): missing field {field}")]
    MissingField {
        index: usize,
        name: String,
        field: &'static str,
    },
    #[error("term {index} ({name}): {message}")]
    InvalidValue {
        index: usize,
        name: String,
        message: String,
    },
    #[error("expected a {expected:?} spec, got {actual:?}")]
    KindMismatch { expected: SpecKind, actual: SpecKind },
}

/// Declarative generated policy or reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct BehaviorSpec {
    terms: Terms,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawSpec {
    kind: SpecKind,
    combine: Combine,
    terms: Vec<RawTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawTerm {
    primitive: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

impl TryFrom<RawSpec> for BehaviorSpec {
    type Error = SpecError;

    fn try_from(raw: RawSpec) -> Result<Self, SpecError> {
        let expected = match raw.kind {
            SpecKind::Policy => Combine::Sum,
            SpecKind::Reward => Combine::AllOf,
        };
        if raw.combine != expected {
            return Err(SpecError::WrongCombine { kind: raw.kind, expected });
        }
        let spec = match raw.kind {
            SpecKind::Policy => {
                let mut terms = Vec::with_capacity(raw.terms.len());
                for (index, t) in raw.terms.into_iter().enumerate() {
                    let primitive = parse_force(&t.primitive, raw.kind)?;
                    let gain = t.gain.ok_or_else(|| SpecError::MissingField {
                        index,
                        name: t.primitive.clone(),
                        field: "gain",
                    })?;
                    let range = t.range.ok_or_else(|| SpecError::MissingField {
                        index,
                        name: t.primitive.clone(),
                        field: "range",
                    })?;
                    terms.push(ForceTerm { primitive, gain, range });
                }
                BehaviorSpec::policy(terms)
            }
            SpecKind::Reward => {
                let mut terms = Vec::with_capacity(raw.terms.len());
                for (index, t) in raw.terms.into_iter().enumerate() {
                    let primitive = parse_condition(&t.primitive, raw.kind)?;
                    let threshold = t.threshold.ok_or_else(|| SpecError::MissingField {
                        index,
                        name: t.primitive.clone(),
                        field: "threshold",
                    })?;
                    terms.push(ConditionTerm { primitive, threshold });
                }
                BehaviorSpec::reward(terms)
            }
        };
        spec.validate(None)?;
        Ok(spec)
    }
}

impl From<BehaviorSpec> for RawSpec {
    fn from(spec: BehaviorSpec) -> RawSpec {
        match spec.terms {
            Terms::Force(terms) => RawSpec {
                kind: SpecKind::Policy,
                combine: Combine::Sum,
                terms: terms
                    .into_iter()
                    .map(|t| RawTerm {
                        primitive: t.primitive.name().to_string(),
                        gain: Some(t.gain),
                        range: Some(t.range),
                        threshold: None,
                    })
                    .collect(),
            },
            Terms::Condition(terms) => RawSpec {
                kind: SpecKind::Reward,
                combine: Combine::AllOf,
                terms: terms
                    .into_iter()
                    .map(|t| RawTerm {
                        primitive: t.primitive.name().to_string(),
                        gain: None,
                        range: None,
                        threshold: Some(t.threshold),
                    })
                    .collect(),
            },
        }
    }
}

fn parse_force(name: &str, kind: SpecKind) -> Result<ForcePrimitive, SpecError> {
    if let Some(p) = ForcePrimitive::ALL.into_iter().find(|p| p.name() == name) {
        return Ok(p);
    }
    if ConditionPrimitive::ALL.iter().any(|p| p.name() == name) {
        return Err(SpecError::WrongKind { name: name.to_string(), kind });
    }
    Err(SpecError::UnknownPrimitive {
        name: name.to_string(),
        allowed: allowed_primitives(),
    })
}

fn parse_condition(name: &str, kind: SpecKind) -> Result<ConditionPrimitive, SpecError> {
    if let Some(p) = ConditionPrimitive::ALL.into_iter().find(|p| p.name() == name) {
        return Ok(p);
    }
    if ForcePrimitive::ALL.iter().any(|p| p.name() == name) {
        return Err(SpecError::WrongKind { name: name.to_string(), kind });
    }
    Err(SpecError::UnknownPrimitive {
        name: name.to_string(),
        allowed: allowed_primitives(),
    })
}

impl BehaviorSpec {
    pub fn policy(terms: Vec<ForceTerm>) -> Self {
        Self { terms: Terms::Force(terms) }
    }

    pub fn reward(terms: Vec<ConditionTerm>) -> Self {
        Self { terms: Terms::Condition(terms) }
    }

    /// Reference prior: attraction to the target cell, neighbor repulsion and
    /// velocity synchronization.
    pub fn reference_policy(r_avoid: f64, r_sense: f64) -> Self {
        Self::policy(vec![
            ForceTerm {
                primitive: ForcePrimitive::AttractTarget,
                gain: 1.0,
                range: r_sense,
            },
            ForceTerm {
                primitive: ForcePrimitive::RepelNeighbors,
                gain: 2.0,
                range: (2.2 * r_avoid).min(r_sense),
            },
            ForceTerm {
                primitive: ForcePrimitive::SyncVelocity,
                gain: 0.3,
                range: r_sense,
            },
        ])
    }

    /// Reference reward: inside the region, collision free, exploration done.
    pub fn reference_reward() -> Self {
        Self::reward(vec![
            ConditionTerm {
                primitive: ConditionPrimitive::InsideRegion,
                threshold: 0.0,
            },
            ConditionTerm {
                primitive: ConditionPrimitive::CollisionFree,
                threshold: 2.0,
            },
            ConditionTerm {
                primitive: ConditionPrimitive::ExplorationDone,
                threshold: CENTROID_DELTA,
            },
        ])
    }

    pub fn kind(&self) -> SpecKind {
        match self.terms {
            Terms::Force(_) => SpecKind::Policy,
            Terms::Condition(_) => SpecKind::Reward,
        }
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn force_terms(&self) -> &[ForceTerm] {
        match &self.terms {
            Terms::Force(t) => t,
            Terms::Condition(_) => &[],
        }
    }

    pub fn condition_terms(&self) -> &[ConditionTerm] {
        match &self.terms {
            Terms::Condition(t) => t,
            Terms::Force(_) => &[],
        }
    }

    /// Names of the primitives used, in term order.
    pub fn primitive_names(&self) -> Vec<&'static str> {
        match &self.terms {
            Terms::Force(t) => t.iter().map(|t| t.primitive.name()).collect(),
            Terms::Condition(t) => t.iter().map(|t| t.primitive.name()).collect(),
        }
    }

    /// Checks parameter invariants. With `r_sense` given, force ranges must
    /// not exceed it.
    pub fn validate(&self, r_sense: Option<f64>) -> Result<(), SpecError> {
        match &self.terms {
            Terms::Force(terms) => {
                for (index, t) in terms.iter().enumerate() {
                    let bad = |message: String| SpecError::InvalidValue {
                        index,
                        name: t.primitive.name().to_string(),
                        message,
                    };
                    if !(t.gain.is_finite() && t.gain >= 0.0) {
                        return Err(bad(format!("gain must be finite and >= 0, got {}", t.gain)));
                    }
                    if !(t.range.is_finite() && t.range > 0.0) {
                        return Err(bad(format!("range must be finite and > 0, got {}", t.range)));
                    }
                    if let Some(rs) = r_sense {
                        if t.range > rs {
                            return Err(bad(format!("range {} exceeds r_sense {rs}", t.range)));
                        }
                    }
                }
            }
            Terms::Condition(terms) => {
                for (index, t) in terms.iter().enumerate() {
                    let ok = match t.primitive {
                        ConditionPrimitive::InsideRegion => t.threshold.is_finite() && t.threshold >= 0.0,
                        _ => t.threshold.is_finite() && t.threshold > 0.0,
                    };
                    if !ok {
                        return Err(SpecError::InvalidValue {
                            index,
                            name: t.primitive.name().to_string(),
                            message: format!("threshold out of range: {}", t.threshold),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Steering toward the target cell: `gain * (v_des - v)`, where the desired
/// velocity is the target offset per second capped at `range` m/s.
pub fn attract_target(view: &LocalView, gain: f64, range: f64) -> Vec2 {
    let v_des = view.target.clamp_norm(range) / ATTRACT_TIME;
    (v_des - view.state.v) * gain
}

/// Linear repulsion from every neighbor closer than `range`.
pub fn repel_neighbors(view: &LocalView, gain: f64, range: f64) -> Vec2 {
    let mut f = Vec2::ZERO;
    for n in &view.neighbors {
        let d = n.rel_p.norm();
        if d < range {
            // rel_p points from i to j; push the other way.
            f += (-n.rel_p).unit_or_zero() * (gain * (range - d) / range);
        }
    }
    f
}

/// Pulls the robot's velocity toward the mean velocity of its neighbors.
pub fn sync_velocity(view: &LocalView, gain: f64) -> Vec2 {
    if view.neighbors.is_empty() {
        return Vec2::ZERO;
    }
    // mean(v_j) - v_i == mean(v_j - v_i)
    let sum = view.neighbors.iter().fold(Vec2::ZERO, |acc, n| acc + n.rel_v);
    sum / view.neighbors.len() as f64 * gain
}

/// Evaluates a policy spec: vector sum of its forces clamped to `[-f_max, f_max]²`.
pub fn prior_policy(view: &LocalView, spec: &BehaviorSpec) -> Result<Vec2, SpecError> {
    let Terms::Force(terms) = &spec.terms else {
        return Err(SpecError::KindMismatch {
            expected: SpecKind::Policy,
            actual: spec.kind(),
        });
    };
    let mut f = Vec2::ZERO;
    for t in terms {
        f += match t.primitive {
            ForcePrimitive::AttractTarget => attract_target(view, t.gain, t.range),
            ForcePrimitive::RepelNeighbors => repel_neighbors(view, t.gain, t.range),
            ForcePrimitive::SyncVelocity => sync_velocity(view, t.gain),
        };
    }
    Ok(f.clamp_components(view.f_max))
}

/// Cosine weight of a cell at distance `d`: 1 at the robot, 0 at `r_sense`.
pub fn cell_weight(d: f64, r_sense: f64) -> f64 {
    0.5 * (1.0 + (std::f64::consts::PI * d / r_sense).cos())
}

/// Offset between the robot and the cosine-weighted centroid of its sensed
/// unoccupied cells; `None` when no cell is sensed.
pub fn weighted_centroid_offset(view: &LocalView) -> Option<f64> {
    let mut wsum = 0.0;
    let mut acc = Vec2::ZERO;
    for &c in &view.cells {
        let w = cell_weight(c.norm(), view.r_sense);
        wsum += w;
        acc += c * w;
    }
    if view.cells.is_empty() {
        return None;
    }
    if wsum <= 0.0 {
        // Every cell sits on the sensing boundary; fall back to the plain mean.
        let mean = view.cells.iter().fold(Vec2::ZERO, |a, &c| a + c) / view.cells.len() as f64;
        return Some(mean.norm());
    }
    Some((acc / wsum).norm())
}

fn condition_holds(view: &LocalView, term: &ConditionTerm) -> bool {
    match term.primitive {
        ConditionPrimitive::InsideRegion => view.inside_region,
        ConditionPrimitive::CollisionFree => view.min_neighbor_distance >= term.threshold * view.r_avoid,
        ConditionPrimitive::ExplorationDone => {
            weighted_centroid_offset(view).is_none_or(|offset| offset <= term.threshold)
        }
    }
}

/// Evaluates a reward spec: 1 when every condition holds, else 0.
pub fn spec_reward(view: &LocalView, spec: &BehaviorSpec) -> Result<f64, SpecError> {
    let Terms::Condition(terms) = &spec.terms else {
        return Err(SpecError::KindMismatch {
            expected: SpecKind::Reward,
            actual: spec.kind(),
        });
    };
    Ok(if terms.iter().all(|t| condition_holds(view, t)) { 1.0 } else { 0.0 })
}

/// The generated reference reward: inside the region, at least `2 r_avoid`
/// from every sensed neighbor, and exploration finished (no sensed unoccupied
/// cells or weighted centroid within `delta`).
pub fn llm_reward(view: &LocalView, delta: f64) -> f64 {
    let explored = view.cells.is_empty() || weighted_centroid_offset(view).is_some_and(|o| o <= delta);
    let ok = view.inside_region && view.min_neighbor_distance >= 2.0 * view.r_avoid && explored;
    if ok {
        1.0
    } else {
        0.0
    }
}

/// Hand-designed baseline reward with the cosine-weighted centroid condition.
pub fn mdr_reward(view: &LocalView) -> f64 {
    let centroid_ok = weighted_centroid_offset(view).is_none_or(|o| o <= CENTROID_DELTA);
    if view.inside_region && view.min_neighbor_distance >= 2.0 * view.r_avoid && centroid_ok {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecOutput {
    Action(Vec2),
    Reward(f64),
}

/// Dispatches a spec of either kind.
pub fn eval_spec(spec: &BehaviorSpec, view: &LocalView) -> Result<SpecOutput, SpecError> {
    match spec.kind() {
        SpecKind::Policy => prior_policy(view, spec).map(SpecOutput::Action),
        SpecKind::Reward => spec_reward(view, spec).map(SpecOutput::Reward),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bare_view() -> LocalView {
        LocalView {
            state: RobotState::at_rest(Vec2::ZERO),
            inside_region: true,
            min_neighbor_distance: 0.4,
            neighbors: vec![],
            target: Vec2::ZERO,
            cells: vec![],
            r_sense: 0.4,
            r_avoid: 0.1,
            f_max: 1.0,
        }
    }

    fn nb(x: f64, y: f64, vx: f64, vy: f64) -> NeighborView {
        NeighborView {
            rel_p: Vec2::new(x, y),
            rel_v: Vec2::new(vx, vy),
        }
    }

    fn spec3(k_att: f64, k_rep: f64, k_sync: f64, rep_range: f64) -> BehaviorSpec {
        BehaviorSpec::policy(vec![
            ForceTerm { primitive: ForcePrimitive::AttractTarget, gain: k_att, range: 0.4 },
            ForceTerm { primitive: ForcePrimitive::RepelNeighbors, gain: k_rep, range: rep_range },
            ForceTerm { primitive: ForcePrimitive::SyncVelocity, gain: k_sync, range: 0.4 },
        ])
    }

    #[test]
    fn on_target_at_rest_is_zero() {
        let v = bare_view();
        let a = prior_policy(&v, &BehaviorSpec::reference_policy(0.1, 0.4)).unwrap();
        assert_eq!(a, Vec2::ZERO);
    }

    #[test]
    fn repulsion_points_away_from_eastern_neighbor() {
        let mut v = bare_view();
        v.neighbors = vec![nb(0.1, 0.0, 0.0, 0.0)];
        let f = repel_neighbors(&v, 1.0, 0.25);
        assert!(f.x < 0.0);
        assert_eq!(f.y, 0.0);
    }

    #[test]
    fn hand_summed_two_neighbor_scene() {
        // Target (0.3, 0.4), capped at 0.4 m: desired velocity (0.24, 0.32), v = 0.
        // Neighbor A at (0.1, 0) moving (0.2, 0): repulsion (-(0.25-0.1)/0.25, 0) = (-0.6, 0).
        // Neighbor B at (0, -0.2) moving (0, 0.4): repulsion (0, (0.25-0.2)/0.25) = (0, 0.2).
        // Sync: 0.5 * mean((0.2,0),(0,0.4)) = (0.05, 0.1).
        // Sum: (0.24 - 0.6 + 0.05, 0.32 + 0.2 + 0.1) = (-0.31, 0.62).
        let mut v = bare_view();
        v.target = Vec2::new(0.3, 0.4);
        v.neighbors = vec![nb(0.1, 0.0, 0.2, 0.0), nb(0.0, -0.2, 0.0, 0.4)];
        let spec = spec3(1.0, 1.0, 0.5, 0.25);
        let a = prior_policy(&v, &spec).unwrap();
        assert!((a.x + 0.31).abs() < 1e-12, "{a:?}");
        assert!((a.y - 0.62).abs() < 1e-12, "{a:?}");

        let mut tight = v.clone();
        tight.f_max = 0.5;
        let a = prior_policy(&tight, &spec).unwrap();
        assert!((a.x + 0.31).abs() < 1e-12);
        assert_eq!(a.y, 0.5);
    }

    #[test]
    fn attraction_damps_motion_on_target() {
        let mut v = bare_view();
        v.state.v = Vec2::new(0.1, -0.2);
        let f = attract_target(&v, 2.0, 0.4);
        assert!((f.x + 0.2).abs() < 1e-15 && (f.y - 0.4).abs() < 1e-15);
    }

    #[test]
    fn policy_rejects_reward_spec() {
        let v = bare_view();
        assert!(matches!(
            prior_policy(&v, &BehaviorSpec::reference_reward()),
            Err(SpecError::KindMismatch { .. })
        ));
    }

    #[test]
    fn rho_endpoints() {
        assert_eq!(cell_weight(0.0, 0.4), 1.0);
        assert!(cell_weight(0.4, 0.4).abs() < 1e-15);
    }

    #[test]
    fn reward_conditions() {
        let mut v = bare_view();
        assert_eq!(mdr_reward(&v), 1.0);
        assert_eq!(llm_reward(&v, CENTROID_DELTA), 1.0);
        v.inside_region = false;
        assert_eq!(llm_reward(&v, CENTROID_DELTA), 0.0);
        assert_eq!(spec_reward(&v, &BehaviorSpec::reference_reward()).unwrap(), 0.0);

        let mut v = bare_view();
        v.cells = vec![Vec2::ZERO];
        assert_eq!(mdr_reward(&v), 1.0);
        v.cells = vec![Vec2::new(0.2, 0.0), Vec2::new(-0.2, 0.0)];
        assert_eq!(weighted_centroid_offset(&v), Some(0.0));
        assert_eq!(mdr_reward(&v), 1.0);
        // A single cell 0.1 m away: centroid offset 0.1 > 0.05.
        v.cells = vec![Vec2::new(0.1, 0.0)];
        assert_eq!(llm_reward(&v, CENTROID_DELTA), 0.0);
        assert_eq!(spec_reward(&v, &BehaviorSpec::reference_reward()).unwrap(), 0.0);

        let mut v = bare_view();
        v.min_neighbor_distance = 0.19;
        assert_eq!(mdr_reward(&v), 0.0);
    }

    #[test]
    fn empty_specs() {
        let v = bare_view();
        assert_eq!(
            eval_spec(&BehaviorSpec::policy(vec![]), &v).unwrap(),
            SpecOutput::Action(Vec2::ZERO)
        );
        let mut outside = bare_view();
        outside.inside_region = false;
        assert_eq!(
            eval_spec(&BehaviorSpec::reward(vec![]), &outside).unwrap(),
            SpecOutput::Reward(1.0)
        );
    }

    #[test]
    fn json_wire_format() {
        let text = r#"{"kind":"policy","combine":"sum","terms":[{"primitive":"attract_target","gain":1.0,"range":0.4}]}"#;
        let spec = BehaviorSpec::from_json(text).unwrap();
        assert_eq!(spec.to_json(), text);
        let reward = BehaviorSpec::reference_reward().to_json();
        assert_eq!(
            reward,
            r#"{"kind":"reward","combine":"all-of","terms":[{"primitive":"inside_region","threshold":0.0},{"primitive":"collision_free","threshold":2.0},{"primitive":"exploration_done","threshold":0.05}]}"#
        );
    }

    #[test]
    fn unknown_primitive_lists_allowed() {
        let text = r#"{"kind":"policy","combine":"sum","terms":[{"primitive":"teleport","gain":1.0,"range":0.4}]}"#;
        let err = BehaviorSpec::from_json(text).unwrap_err().to_string();
        assert!(err.contains("teleport"), "{err}");
        for p in ["attract_target", "repel_neighbors", "sync_velocity", "inside_region", "collision_free", "exploration_done"] {
            assert!(err.contains(p), "{err}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let neg = r#"{"kind":"policy","combine":"sum","terms":[{"primitive":"attract_target","gain":-1.0,"range":0.4}]}"#;
        assert!(BehaviorSpec::from_json(neg).is_err());
        let combine = r#"{"kind":"policy","combine":"all-of","terms":[]}"#;
        assert!(BehaviorSpec::from_json(combine).is_err());
        let mixed = r#"{"kind":"reward","combine":"all-of","terms":[{"primitive":"sync_velocity","threshold":1.0}]}"#;
        assert!(BehaviorSpec::from_json(mixed).is_err());
        let spec = BehaviorSpec::reference_policy(0.1, 0.4);
        assert!(spec.validate(Some(0.3)).is_err());
        assert!(spec.validate(Some(0.4)).is_ok());
    }
}
