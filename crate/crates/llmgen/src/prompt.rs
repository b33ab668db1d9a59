//! User-instruction prompt: task description plus the optional guiding
//! questions and accessor list.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TASK_HEADER: &str = "### TASK";
pub const COT_HEADER: &str = "### GUIDING QUESTIONS";
pub const API_HEADER: &str = "### AVAILABLE APIS";
pub const SECTION_END: &str = "### END";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSignature {
    pub name: String,
    pub params: String,
    pub returns: String,
    pub doc: String,
}

impl ApiSignature {
    fn new(name: &str, params: &str, returns: &str, doc: &str) -> Self {
        Self {
            name: name.into(),
            params: params.into(),
            returns: returns.into(),
            doc: doc.into(),
        }
    }

    pub fn render(&self) -> String {
        format!("- {}({}) -> {}: {}", self.name, self.params, self.returns, self.doc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task_description: String,
    pub cot_questions: Vec<String>,
    pub api_signatures: Vec<ApiSignature>,
    pub include_cot: bool,
    pub include_apis: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("task description is empty")]
    EmptyTask,
}

/// The four guiding questions for behavior synthesis.
pub fn shape_assembly_questions() -> Vec<String> {
    [
        "What constraints must each robot satisfy for the swarm to complete the task?",
        "Which of those constraints are basic (few steps, simple to implement) and which are complex?",
        "Which basic skills should a robot have to meet the basic constraints?",
        "Which constraints are the key sub-goals whose joint satisfaction means the task is complete?",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Accessors over a robot's local view.
pub fn shape_assembly_apis() -> Vec<ApiSignature> {
    vec![
        ApiSignature::new("get_position", "", "vec2", "the robot's position in meters"),
        ApiSignature::new("get_velocity", "", "vec2", "the robot's velocity in m/s"),
        ApiSignature::new(
            "get_neighbors",
            "",
            "list[(vec2, vec2)]",
            "relative position and velocity of up to n_hn nearest neighbors within r_sense",
        ),
        ApiSignature::new(
            "get_target_cell",
            "",
            "vec2",
            "offset to the nearest unoccupied cell of the target region",
        ),
        ApiSignature::new(
            "get_unoccupied_cells",
            "",
            "list[vec2]",
            "offsets to sensed unoccupied cells within r_sense",
        ),
        ApiSignature::new("is_inside_region", "", "bool", "whether the robot lies inside the target region"),
        ApiSignature::new(
            "min_neighbor_distance",
            "",
            "float",
            "distance to the nearest sensed neighbor, r_sense if none",
        ),
        ApiSignature::new("get_r_sense", "", "float", "sensing radius in meters"),
        ApiSignature::new("get_r_avoid", "", "float", "robot radius used for collisions and occupancy"),
    ]
}

impl PromptBundle {
    /// Shape-assembly instruction with guiding questions and accessors enabled.
    pub fn shape_assembly() -> Self {
        Self {
            task_description: "A swarm of identical robots starts outside a target shape drawn on a grid. \
Each robot senses only neighbors and grid cells within r_sense. Move the robots into the shape so that \
they spread evenly over its cells without colliding."
                .into(),
            cot_questions: shape_assembly_questions(),
            api_signatures: shape_assembly_apis(),
            include_cot: true,
            include_apis: true,
        }
    }

    pub fn with_flags(mut self, include_cot: bool, include_apis: bool) -> Self {
        self.include_cot = include_cot;
        self.include_apis = include_apis;
        self
    }
}

/// Renders the task section, then the guiding questions and the API list when
/// enabled. Every section ends with [`SECTION_END`].
pub fn assemble_prompt(bundle: &PromptBundle) -> Result<String, PromptError> {
    let task = bundle.task_description.trim();
    if task.is_empty() {
        return Err(PromptError::EmptyTask);
    }
    let mut out = String::new();
    push_section(&mut out, TASK_HEADER, task);
    if bundle.include_cot {
        let body: Vec<String> = bundle
            .cot_questions
            .iter()
            .enumerate()
            .map(|(k, q)| format!("{}. {}", k + 1, q))
            .collect();
        push_section(&mut out, COT_HEADER, &body.join("\n"));
    }
    if bundle.include_apis {
        let body: Vec<String> = bundle.api_signatures.iter().map(ApiSignature::render).collect();
        push_section(&mut out, API_HEADER, &body.join("\n"));
    }
    Ok(out)
}

fn push_section(out: &mut String, header: &str, body: &str) {
    out.push_str(header);
    out.push('\n');
    out.push_str(body);
    out.push('\n');
    out.push_str(SECTION_END);
    out.push('\n');
}
