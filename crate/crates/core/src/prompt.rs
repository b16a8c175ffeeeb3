//! Prompt templates and assembly for the classification task and the three
//! PHQ-8 stages.
//!
//! Templates use named placeholders: `{docs}` in the system preamble,
//! `{participants}` in the task 1 and stage 1 instructions, and
//! `{external_score}` in the stage 3 instructions. The answer-line formats the
//! default templates request are the ones [`crate::parser`] understands.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::BackgroundConfig;
use crate::tokens::TokenizerSpec;
use crate::transcript::{JointDialogue, PHQ8_MAX_TOTAL};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template}: unknown placeholder {{{name}}}")]
    UnresolvedPlaceholder { template: &'static str, name: String },
    #[error("template {template}: required placeholder {{{name}}} is missing")]
    MissingPlaceholder { template: &'static str, name: &'static str },
    #[error("estimated prompt size {estimated} tokens exceeds the limit of {limit}")]
    TokenBudgetExceeded { estimated: usize, limit: usize },
    #[error("batch of {size} dialogues is outside 1..={limit}")]
    BatchSize { size: usize, limit: usize },
    #[error("external score {0} is outside 0..=24")]
    ScoreOutOfRange(u32),
    #[error("template file: {0}")]
    TemplateFile(String),
}

pub const LIKELIHOOD_LINE: &str = "Likelihood of Ongoing Mental Health Disorder: N/7";
pub const STAGE1_TOTAL_LINE: &str = "Estimated PHQ-8 Score: a+b+c+d+e+f+g+h=T";
pub const STAGE2_TOTAL_LINE: &str = "Total PHQ-8 Score: a+b+c+d+e+f+g+h = T";

/// PHQ-8 items in questionnaire order.
pub const PHQ8_ITEM_NAMES: [&str; 8] = [
    "Little interest or pleasure in doing things",
    "Feeling down, depressed, or hopeless",
    "Trouble falling or staying asleep, or sleeping too much",
    "Feeling tired or having little energy",
    "Poor appetite or overeating",
    "Feeling bad about yourself, or that you are a failure, or have let yourself or your family down",
    "Trouble concentrating on things, such as reading the newspaper or watching television",
    "Moving or speaking so slowly that other people could have noticed, or the opposite: being so fidgety or restless that you have been moving around a lot more than usual",
];

const DEFAULT_SYSTEM: &str = "You are a psychological assessment assistant that pre-screens clinical interview \
transcripts for signs of mental health disorders such as depression, anxiety, stress and bipolar disorder. \
Your assessments are preliminary insights, not diagnoses.

{docs}";

const DEFAULT_TASK1: &str = "Each participant below is identified by ID and followed by their joint interview \
dialogue, with separate responses marked by \"./\".

For every participant:
1. Assess Mental Health Status: determine whether the participant is likely to have an ongoing mental health \
issue, explaining which linguistic indicators in the text support your assessment.
2. Quantify Condition Severity: rate that likelihood on a 7-point scale, where 1 means \"not at all likely\" \
and 7 means \"extremely likely\".

Begin each assessment with a line \"Participant <id>:\" and end it with a line in exactly this form:
Likelihood of Ongoing Mental Health Disorder: N/7

{participants}";

const DEFAULT_STAGE1: &str = "Analyze the clinical interview transcript below to determine the mental health \
status of the individual, using both the transcript and the evaluation criteria in your background materials.

1. Mental Health Assessment: decide whether the individual has mental health issues and give a reasoned \
explanation. Cite the relevant portions of the transcript and show how they align with the criteria, including \
the PHQ-8 items.
2. PHQ-8 Score Estimation: estimate the individual's PHQ-8 score (0 to 24).

Report the estimate on a line in one of these forms, where a to h are the eight item scores (each 0 to 3) in \
PHQ-8 item order:
Estimated PHQ-8 Score: T
Estimated PHQ-8 Score: a+b+c+d+e+f+g+h=T

{participants}";

const DEFAULT_STAGE2: &str = "Break down how you derived the PHQ-8 score for each symptom. Go through the eight \
PHQ-8 items in order:
1. Little interest or pleasure in doing things
2. Feeling down, depressed, or hopeless
3. Trouble falling or staying asleep, or sleeping too much
4. Feeling tired or having little energy
5. Poor appetite or overeating
6. Feeling bad about yourself, or that you are a failure, or have let yourself or your family down
7. Trouble concentrating on things
8. Moving or speaking slowly, or being fidgety or restless

For each item quote the supporting evidence and give a line \"Score: k\" with k from 0 to 3. Finish with the line:
Total PHQ-8 Score: a+b+c+d+e+f+g+h = T";

const DEFAULT_STAGE3: &str = "Another evaluator assigned this individual a PHQ-8 score of {external_score}.
1. Agree or Disagree: state whether you agree with the other evaluator's score.
2. Explain Reasoning: explain in detail why you agree or disagree.
3. Reanalyze and Discuss: reanalyze the PHQ-8 score and discuss any discrepancies with your initial assessment.

State your conclusion as \"I agree\" or \"I do not agree\", and give your final value as \"revised PHQ-8 score of T\".";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Docs,
    Participants,
    ExternalScore,
}

impl Slot {
    fn name(self) -> &'static str {
        match self {
            Slot::Docs => "docs",
            Slot::Participants => "participants",
            Slot::ExternalScore => "external_score",
        }
    }
}

/// A template split into literal text and placeholder slots.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Template {
    source: String,
    parts: Vec<Part>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Text(String),
    Slot(Slot),
}

impl Template {
    fn compile(template: &'static str, source: &str, allowed: &[Slot], required: &[Slot]) -> Result<Self, PromptError> {
        let mut parts = Vec::new();
        let mut literal = String::new();
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let ident_len = after
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(after.len());
            if ident_len > 0 && after[ident_len..].starts_with('}') {
                let name = &after[..ident_len];
                let slot = allowed.iter().copied().find(|s| s.name() == name).ok_or_else(|| {
                    PromptError::UnresolvedPlaceholder {
                        template,
                        name: name.to_string(),
                    }
                })?;
                literal.push_str(&rest[..open]);
                if !literal.is_empty() {
                    parts.push(Part::Text(std::mem::take(&mut literal)));
                }
                parts.push(Part::Slot(slot));
                rest = &after[ident_len + 1..];
            } else {
                literal.push_str(&rest[..=open]);
                rest = after;
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            parts.push(Part::Text(literal));
        }
        for &slot in required {
            if !parts.contains(&Part::Slot(slot)) {
                return Err(PromptError::MissingPlaceholder {
                    template,
                    name: slot.name(),
                });
            }
        }
        Ok(Template {
            source: source.to_string(),
            parts,
        })
    }

    fn render(&self, fill: impl Fn(Slot) -> String) -> String {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                Part::Text(t) => out.push_str(t),
                Part::Slot(s) => out.push_str(&fill(*s)),
            }
        }
        out
    }
}

/// Raw template text as stored in a template file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSources {
    pub system_preamble: String,
    pub task1_instructions: String,
    pub stage1_instructions: String,
    pub stage2_instructions: String,
    pub stage3_instructions: String,
}

impl Default for TemplateSources {
    fn default() -> Self {
        TemplateSources {
            system_preamble: DEFAULT_SYSTEM.to_string(),
            task1_instructions: DEFAULT_TASK1.to_string(),
            stage1_instructions: DEFAULT_STAGE1.to_string(),
            stage2_instructions: DEFAULT_STAGE2.to_string(),
            stage3_instructions: DEFAULT_STAGE3.to_string(),
        }
    }
}

/// Validated prompt templates. Construction fails if a template names an
/// unknown placeholder or lacks a required one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    system_preamble: Template,
    task1: Template,
    stage1: Template,
    stage2: Template,
    stage3: Template,
}

impl Default for PromptBundle {
    fn default() -> Self {
        PromptBundle::new(TemplateSources::default()).expect("default templates are valid")
    }
}

impl PromptBundle {
    pub fn new(src: TemplateSources) -> Result<Self, PromptError> {
        use Slot::*;
        Ok(PromptBundle {
            system_preamble: Template::compile("system_preamble", &src.system_preamble, &[Docs], &[Docs])?,
            task1: Template::compile(
                "task1_instructions",
                &src.task1_instructions,
                &[Participants],
                &[Participants],
            )?,
            stage1: Template::compile(
                "stage1_instructions",
                &src.stage1_instructions,
                &[Participants],
                &[Participants],
            )?,
            stage2: Template::compile("stage2_instructions", &src.stage2_instructions, &[], &[])?,
            stage3: Template::compile(
                "stage3_instructions",
                &src.stage3_instructions,
                &[ExternalScore],
                &[ExternalScore],
            )?,
        })
    }

    /// Parse a TOML template file. Missing keys fall back to the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, PromptError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Partial {
            system_preamble: Option<String>,
            task1_instructions: Option<String>,
            stage1_instructions: Option<String>,
            stage2_instructions: Option<String>,
            stage3_instructions: Option<String>,
        }
        let p: Partial = toml::from_str(text).map_err(|e| PromptError::TemplateFile(e.to_string()))?;
        let d = TemplateSources::default();
        PromptBundle::new(TemplateSources {
            system_preamble: p.system_preamble.unwrap_or(d.system_preamble),
            task1_instructions: p.task1_instructions.unwrap_or(d.task1_instructions),
            stage1_instructions: p.stage1_instructions.unwrap_or(d.stage1_instructions),
            stage2_instructions: p.stage2_instructions.unwrap_or(d.stage2_instructions),
            stage3_instructions: p.stage3_instructions.unwrap_or(d.stage3_instructions),
        })
    }

    pub fn sources(&self) -> TemplateSources {
        TemplateSources {
            system_preamble: self.system_preamble.source.clone(),
            task1_instructions: self.task1.source.clone(),
            stage1_instructions: self.stage1.source.clone(),
            stage2_instructions: self.stage2.source.clone(),
            stage3_instructions: self.stage3.source.clone(),
        }
    }
}

/// Limits applied while assembling prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    /// Upper bound on the estimated prompt size, in tokens.
    pub max_prompt_tokens: usize,
    /// Most dialogues allowed in one task 1 prompt.
    pub max_batch: usize,
    pub tokenizer: TokenizerSpec,
}

impl Default for TokenBudget {
    fn default() -> Self {
        TokenBudget {
            max_prompt_tokens: 120_000,
            max_batch: 16,
            tokenizer: TokenizerSpec::WordApprox,
        }
    }
}

/// An assembled prompt: system message plus the first user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// System and user text joined by a blank line.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

/// Heading that opens each participant block in a prompt.
pub fn participant_heading(participant_id: u32) -> String {
    format!("[Participant {participant_id}]")
}

pub struct PromptAssembler<'a> {
    config: &'a BackgroundConfig,
    bundle: &'a PromptBundle,
    budget: TokenBudget,
}

impl<'a> PromptAssembler<'a> {
    pub fn new(config: &'a BackgroundConfig, bundle: &'a PromptBundle) -> Self {
        PromptAssembler {
            config,
            bundle,
            budget: TokenBudget::default(),
        }
    }

    pub fn with_budget(mut self, budget: TokenBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> TokenBudget {
        self.budget
    }

    pub fn config(&self) -> &BackgroundConfig {
        self.config
    }

    fn docs_section(&self) -> String {
        if self.config.is_empty() {
            return String::new();
        }
        let mut out = String::from("Background knowledge:");
        for doc in self.config.docs() {
            out.push_str(&format!("\n\n### {}\n{}", doc.title, doc.body.trim_end()));
        }
        out
    }

    fn system(&self) -> String {
        let docs = self.docs_section();
        self.bundle
            .system_preamble
            .render(|_| docs.clone())
            .trim_end()
            .to_string()
    }

    fn participants_section(dialogues: &[&JointDialogue]) -> String {
        dialogues
            .iter()
            .map(|d| format!("{}\n{}", participant_heading(d.participant_id), d.text))
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    fn check_budget(&self, prompt: Prompt) -> Result<Prompt, PromptError> {
        let counter = self.budget.tokenizer.counter();
        let estimated = counter.count(&prompt.system) + counter.count(&prompt.user);
        if estimated > self.budget.max_prompt_tokens {
            return Err(PromptError::TokenBudgetExceeded {
                estimated,
                limit: self.budget.max_prompt_tokens,
            });
        }
        Ok(prompt)
    }

    /// Classification prompt covering one batch of participants, in input order.
    pub fn task1(&self, dialogues: &[&JointDialogue]) -> Result<Prompt, PromptError> {
        if dialogues.is_empty() || dialogues.len() > self.budget.max_batch {
            return Err(PromptError::BatchSize {
                size: dialogues.len(),
                limit: self.budget.max_batch,
            });
        }
        let participants = Self::participants_section(dialogues);
        let prompt = Prompt {
            system: self.system(),
            user: self.bundle.task1.render(|_| participants.clone()),
        };
        self.check_budget(prompt)
    }

    /// Opening prompt of the three-stage PHQ-8 conversation.
    pub fn stage1(&self, dialogue: &JointDialogue) -> Result<Prompt, PromptError> {
        let participants = Self::participants_section(&[dialogue]);
        let prompt = Prompt {
            system: self.system(),
            user: self.bundle.stage1.render(|_| participants.clone()),
        };
        self.check_budget(prompt)
    }

    /// Follow-up asking for the per-item breakdown.
    pub fn stage2(&self) -> String {
        self.bundle.stage2.render(|_| String::new())
    }

    /// Follow-up presenting another evaluator's total for review.
    pub fn stage3(&self, external_score: u32) -> Result<String, PromptError> {
        if external_score > u32::from(PHQ8_MAX_TOTAL) {
            return Err(PromptError::ScoreOutOfRange(external_score));
        }
        Ok(self.bundle.stage3.render(|_| external_score.to_string()))
    }
}

pub fn assemble_task1_prompt(
    cfg: &BackgroundConfig,
    bundle: &PromptBundle,
    dialogues: &[&JointDialogue],
) -> Result<Prompt, PromptError> {
    PromptAssembler::new(cfg, bundle).task1(dialogues)
}

pub fn assemble_stage1_prompt(
    cfg: &BackgroundConfig,
    bundle: &PromptBundle,
    dialogue: &JointDialogue,
) -> Result<Prompt, PromptError> {
    PromptAssembler::new(cfg, bundle).stage1(dialogue)
}

pub fn assemble_stage2_prompt(bundle: &PromptBundle) -> String {
    bundle.stage2.render(|_| String::new())
}

pub fn assemble_stage3_prompt(bundle: &PromptBundle, external_score: u32) -> Result<String, PromptError> {
    PromptAssembler::new(&BackgroundConfig::empty(""), bundle).stage3(external_score)
}
