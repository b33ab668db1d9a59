//! Mechanical review: every basic skill needs a force term and every key
//! sub-goal a reward condition, matched through fixed name tables.

use std::collections::BTreeSet;

use lamarl::behavior::{ConditionPrimitive, ForcePrimitive, Terms};
use serde::{Deserialize, Serialize};

use crate::analysis::ConstraintAnalysis;
use crate::generate::GenerationResult;

pub const NAME_TABLE_VERSION: u32 = 1;

const SKILL_TABLE: &[(&str, ForcePrimitive)] = &[
    ("movement towards the target region", ForcePrimitive::AttractTarget),
    ("movement toward the target region", ForcePrimitive::AttractTarget),
    ("move towards the target region", ForcePrimitive::AttractTarget),
    ("move toward the target region", ForcePrimitive::AttractTarget),
    ("entering the target region", ForcePrimitive::AttractTarget),
    ("attract_target", ForcePrimitive::AttractTarget),
    ("collision avoidance", ForcePrimitive::RepelNeighbors),
    ("avoid collisions", ForcePrimitive::RepelNeighbors),
    ("repel_neighbors", ForcePrimitive::RepelNeighbors),
    ("synchronization with neighbors", ForcePrimitive::SyncVelocity),
    ("synchronize with neighbors", ForcePrimitive::SyncVelocity),
    ("velocity synchronization", ForcePrimitive::SyncVelocity),
    ("sync_velocity", ForcePrimitive::SyncVelocity),
];

const SUBGOAL_TABLE: &[(&str, ConditionPrimitive)] = &[
    ("entering the target region", ConditionPrimitive::InsideRegion),
    ("enter the target region", ConditionPrimitive::InsideRegion),
    ("inside the target region", ConditionPrimitive::InsideRegion),
    ("inside_region", ConditionPrimitive::InsideRegion),
    ("collision avoidance", ConditionPrimitive::CollisionFree),
    ("avoid collisions", ConditionPrimitive::CollisionFree),
    ("collision_free", ConditionPrimitive::CollisionFree),
    ("exploration of unoccupied cells", ConditionPrimitive::ExplorationDone),
    ("explore unoccupied cells", ConditionPrimitive::ExplorationDone),
    ("exploration_done", ConditionPrimitive::ExplorationDone),
];

fn norm(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches('.')
        .to_lowercase()
}

pub fn skill_primitive(name: &str) -> Option<ForcePrimitive> {
    let n = norm(name);
    SKILL_TABLE.iter().find(|(k, _)| *k == n).map(|&(_, p)| p)
}

pub fn subgoal_primitive(name: &str) -> Option<ConditionPrimitive> {
    let n = norm(name);
    SUBGOAL_TABLE.iter().find(|(k, _)| *k == n).map(|&(_, p)| p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewReport {
    pub policy_ok: bool,
    pub reward_ok: bool,
    pub missing_skills: Vec<String>,
    pub missing_subgoals: Vec<String>,
}

impl ReviewReport {
    pub fn passed(&self) -> bool {
        self.policy_ok && self.reward_ok
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "policy: {}\nreward: {}\n",
            if self.policy_ok { "ok" } else { "incomplete" },
            if self.reward_ok { "ok" } else { "incomplete" }
        );
        for s in &self.missing_skills {
            out.push_str(&format!("missing skill: {s}\n"));
        }
        for s in &self.missing_subgoals {
            out.push_str(&format!("missing sub-goal: {s}\n"));
        }
        out
    }
}

/// Lists skills and sub-goals that are unmapped or lack a matching term.
pub fn review_functions(result: &GenerationResult, analysis: &ConstraintAnalysis) -> ReviewReport {
    let forces: BTreeSet<ForcePrimitive> = match result.policy_spec.terms() {
        Terms::Force(t) => t.iter().map(|t| t.primitive).collect(),
        Terms::Condition(_) => BTreeSet::new(),
    };
    let conditions: BTreeSet<ConditionPrimitive> = match result.reward_spec.terms() {
        Terms::Condition(t) => t.iter().map(|t| t.primitive).collect(),
        Terms::Force(_) => BTreeSet::new(),
    };
    let missing_skills: Vec<String> = analysis
        .basic_skills
        .iter()
        .filter(|s| !skill_primitive(s).is_some_and(|p| forces.contains(&p)))
        .cloned()
        .collect();
    let missing_subgoals: Vec<String> = analysis
        .key_subgoals
        .iter()
        .filter(|s| !subgoal_primitive(s).is_some_and(|p| conditions.contains(&p)))
        .cloned()
        .collect();
    ReviewReport {
        policy_ok: missing_skills.is_empty(),
        reward_ok: missing_subgoals.is_empty(),
        missing_skills,
        missing_subgoals,
    }
}
