//! Score and verdict extraction from free-text model replies.
//!
//! Each target (likelihood, PHQ-8 total, item breakdown, verdict) has an
//! ordered list of rules; the first rule that finds a candidate decides the
//! outcome. Within a rule the last candidate in the text wins, since replies
//! tend to state their conclusion at the end. Candidates that fail
//! validation (range, arithmetic) yield a missing value with a diagnostic;
//! nothing is silently corrected.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::transcript::{PHQ8_ITEMS, PHQ8_ITEM_MAX, PHQ8_MAX_TOTAL};

pub const RULESET_VERSION: &str = "ruleset-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutcome<V> {
    pub value: Option<V>,
    pub matched_rule: Option<String>,
    pub diagnostics: Vec<String>,
}

impl<V> ParseOutcome<V> {
    fn missing(diagnostics: Vec<String>) -> Self {
        ParseOutcome {
            value: None,
            matched_rule: None,
            diagnostics,
        }
    }

    fn matched(rule: Rule, value: V, diagnostics: Vec<String>) -> Self {
        ParseOutcome {
            value: Some(value),
            matched_rule: Some(rule.id().to_string()),
            diagnostics,
        }
    }

    fn rejected(rule: Rule, diagnostics: Vec<String>) -> Self {
        ParseOutcome {
            value: None,
            matched_rule: Some(rule.id().to_string()),
            diagnostics,
        }
    }

    pub fn is_na(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Likelihood anchor followed by `N/7`.
    LikelihoodSlashSeven,
    /// Likelihood anchor followed by an English number word `out of 7`.
    LikelihoodWordNumber,
    /// `PHQ-8 Score:` followed by `a+b+...+h=T`.
    Phq8SumExpression,
    /// `PHQ-8 Score:` followed by a bare integer.
    Phq8BareInteger,
    /// Per-item scores taken from the closing total expression.
    ItemsTotalExpression,
    /// Per-item scores taken from eight `Score: k` lines.
    ItemsScoreLines,
    /// Agree/disagree phrase, negations checked first.
    VerdictPhrase,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::LikelihoodSlashSeven => "likelihood/anchor-slash-7",
            Rule::LikelihoodWordNumber => "likelihood/anchor-word-number",
            Rule::Phq8SumExpression => "phq8-total/sum-expression",
            Rule::Phq8BareInteger => "phq8-total/bare-integer",
            Rule::ItemsTotalExpression => "items/total-expression",
            Rule::ItemsScoreLines => "items/score-lines",
            Rule::VerdictPhrase => "verdict/phrase",
        }
    }
}

/// Ordered rules per extraction target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseRuleSet {
    pub version: String,
    pub likelihood: Vec<Rule>,
    pub phq8_total: Vec<Rule>,
    pub item_breakdown: Vec<Rule>,
    pub verdict: Vec<Rule>,
}

impl Default for ParseRuleSet {
    fn default() -> Self {
        ParseRuleSet::v1()
    }
}

impl ParseRuleSet {
    pub fn v1() -> Self {
        ParseRuleSet {
            version: RULESET_VERSION.to_string(),
            likelihood: vec![Rule::LikelihoodSlashSeven],
            phq8_total: vec![Rule::Phq8SumExpression, Rule::Phq8BareInteger],
            item_breakdown: vec![Rule::ItemsTotalExpression, Rule::ItemsScoreLines],
            verdict: vec![Rule::VerdictPhrase],
        }
    }

    /// Also accept number words such as "five out of 7" for likelihoods.
    pub fn with_word_numbers(mut self) -> Self {
        if !self.likelihood.contains(&Rule::LikelihoodWordNumber) {
            self.likelihood.push(Rule::LikelihoodWordNumber);
        }
        self
    }

    pub fn parse_likelihood(&self, reply: &str, expected_ids: &[u32]) -> BTreeMap<u32, ParseOutcome<u8>> {
        let clean = strip_emphasis(reply);
        let headers = participant_headers(&clean);
        expected_ids
            .iter()
            .map(|&id| {
                let segments = segments_for(&clean, &headers, id, expected_ids.len());
                let outcome = if segments.is_empty() {
                    ParseOutcome::missing(vec![format!("participant {id} not found in reply")])
                } else {
                    self.likelihood_in(&segments)
                };
                (id, outcome)
            })
            .collect()
    }

    fn likelihood_in(&self, segments: &[&str]) -> ParseOutcome<u8> {
        let mut diagnostics = Vec::new();
        for &rule in &self.likelihood {
            let candidate = segments
                .iter()
                .filter_map(|seg| likelihood_candidate(rule, seg))
                .next_back();
            if let Some(value) = candidate {
                if (1..=7).contains(&value) {
                    return ParseOutcome::matched(rule, value as u8, diagnostics);
                }
                diagnostics.push(format!("likelihood {value}/7 out of range"));
                return ParseOutcome::rejected(rule, diagnostics);
            }
        }
        if !segments.iter().any(|s| LIKELIHOOD_ANCHOR.is_match(s)) {
            diagnostics.push("no likelihood anchor".into());
        } else {
            diagnostics.push("no N/7 score after the likelihood anchor".into());
        }
        ParseOutcome::missing(diagnostics)
    }

    pub fn parse_phq8_total(&self, reply: &str) -> ParseOutcome<Phq8Total> {
        let clean = strip_emphasis(reply);
        let mut diagnostics = Vec::new();
        for &rule in &self.phq8_total {
            match rule {
                Rule::Phq8SumExpression => {
                    if let Some(expr) = anchored_expressions(&clean).next_back() {
                        return match expr.validate() {
                            Ok(total) => ParseOutcome::matched(rule, total, diagnostics),
                            Err(mut errs) => {
                                diagnostics.append(&mut errs);
                                ParseOutcome::rejected(rule, diagnostics)
                            }
                        };
                    }
                }
                Rule::Phq8BareInteger => {
                    if let Some(value) = anchored_integers(&clean).next_back() {
                        if value <= u64::from(PHQ8_MAX_TOTAL) {
                            let total = Phq8Total {
                                total: value as u8,
                                addends: None,
                            };
                            return ParseOutcome::matched(rule, total, diagnostics);
                        }
                        diagnostics.push(format!("total {value} out of range 0..=24"));
                        return ParseOutcome::rejected(rule, diagnostics);
                    }
                }
                _ => {}
            }
        }
        diagnostics.push("no PHQ-8 score line".into());
        ParseOutcome::missing(diagnostics)
    }

    pub fn parse_item_breakdown(&self, reply: &str) -> ParseOutcome<[u8; PHQ8_ITEMS]> {
        let clean = strip_emphasis(reply);
        let mut diagnostics = Vec::new();
        let mut rejected_by = None;
        for &rule in &self.item_breakdown {
            match rule {
                Rule::ItemsTotalExpression => {
                    if let Some(expr) = anchored_expressions(&clean).next_back() {
                        match expr.validate() {
                            Ok(Phq8Total {
                                addends: Some(items), ..
                            }) => return ParseOutcome::matched(rule, items, diagnostics),
                            Ok(_) => unreachable!("validated expressions carry addends"),
                            Err(mut errs) => {
                                diagnostics.append(&mut errs);
                                rejected_by.get_or_insert(rule);
                            }
                        }
                    }
                }
                Rule::ItemsScoreLines => {
                    let scores = item_score_lines(&clean);
                    if scores.is_empty() {
                        continue;
                    }
                    if scores.len() != PHQ8_ITEMS {
                        diagnostics.push(format!("found {} per-item scores, need {PHQ8_ITEMS}", scores.len()));
                        rejected_by.get_or_insert(rule);
                        continue;
                    }
                    if let Some(bad) = scores.iter().find(|&&s| s > u64::from(PHQ8_ITEM_MAX)) {
                        diagnostics.push(format!("item score {bad} out of range 0..=3"));
                        rejected_by.get_or_insert(rule);
                        continue;
                    }
                    let mut items = [0u8; PHQ8_ITEMS];
                    for (slot, s) in items.iter_mut().zip(&scores) {
                        *slot = *s as u8;
                    }
                    return ParseOutcome::matched(rule, items, diagnostics);
                }
                _ => {}
            }
        }
        match rejected_by {
            Some(rule) => ParseOutcome::rejected(rule, diagnostics),
            None => {
                diagnostics.push("no item breakdown found".into());
                ParseOutcome::missing(diagnostics)
            }
        }
    }

    pub fn parse_verdict(&self, reply: &str) -> ParseOutcome<VerdictParse> {
        let clean = strip_emphasis(reply);
        if !self.verdict.contains(&Rule::VerdictPhrase) {
            return ParseOutcome::missing(vec!["no verdict rules enabled".into()]);
        }
        let Some(last) = VERDICT_PHRASE.find_iter(&clean).last() else {
            return ParseOutcome::missing(vec!["no verdict phrase".into()]);
        };
        let phrase = last.as_str().to_ascii_lowercase();
        let verdict = if phrase.starts_with("dis") || phrase.contains("not") || phrase.contains("n't") {
            Verdict::Disagree
        } else {
            Verdict::Agree
        };
        let revised = self.revised_total_from(&clean, last.end());
        ParseOutcome::matched(
            Rule::VerdictPhrase,
            VerdictParse {
                verdict,
                revised_total: revised.value,
            },
            revised.diagnostics,
        )
    }

    /// The reviewer's own total: an explicit "revised ... score of T" phrase,
    /// otherwise the first valid total expression after the verdict.
    pub fn parse_revised_total(&self, reply: &str) -> ParseOutcome<u8> {
        let clean = strip_emphasis(reply);
        let after = VERDICT_PHRASE.find_iter(&clean).last().map(|m| m.end()).unwrap_or(0);
        self.revised_total_from(&clean, after)
    }

    fn revised_total_from(&self, clean: &str, verdict_end: usize) -> ParseOutcome<u8> {
        let mut diagnostics = Vec::new();
        if let Some(caps) = REVISED_SCORE.captures_iter(clean).last() {
            let value: u64 = caps[1].parse().unwrap_or(u64::MAX);
            if value <= u64::from(PHQ8_MAX_TOTAL) {
                return ParseOutcome {
                    value: Some(value as u8),
                    matched_rule: Some("revised/phrase".into()),
                    diagnostics,
                };
            }
            diagnostics.push(format!("revised score {value} out of range 0..=24"));
        }
        let after = anchored_expressions(clean)
            .filter(|e| e.start >= verdict_end)
            .find_map(|e| e.validate().ok());
        match after {
            Some(t) => ParseOutcome {
                value: Some(t.total),
                matched_rule: Some("revised/expression-after-verdict".into()),
                diagnostics,
            },
            None => {
                diagnostics.push("no revised total".into());
                ParseOutcome::missing(diagnostics)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phq8Total {
    pub total: u8,
    pub addends: Option<[u8; PHQ8_ITEMS]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Agree,
    Disagree,
    Unclear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictParse {
    pub verdict: Verdict,
    pub revised_total: Option<u8>,
}

pub fn parse_likelihood(reply: &str, expected_ids: &[u32]) -> BTreeMap<u32, ParseOutcome<u8>> {
    ParseRuleSet::v1().parse_likelihood(reply, expected_ids)
}

pub fn parse_phq8_total(reply: &str) -> ParseOutcome<Phq8Total> {
    ParseRuleSet::v1().parse_phq8_total(reply)
}

pub fn parse_item_breakdown(reply: &str) -> ParseOutcome<[u8; PHQ8_ITEMS]> {
    ParseRuleSet::v1().parse_item_breakdown(reply)
}

pub fn parse_verdict(reply: &str) -> ParseOutcome<VerdictParse> {
    ParseRuleSet::v1().parse_verdict(reply)
}

/// The part of a reply that talks about `id`, emphasis stripped. A reply
/// covering a single participant without headers is returned whole.
pub fn participant_section(reply: &str, id: u32, n_expected: usize) -> Option<String> {
    let clean = strip_emphasis(reply);
    let headers = participant_headers(&clean);
    let segments = segments_for(&clean, &headers, id, n_expected);
    if segments.is_empty() {
        return None;
    }
    // The header regex stops at the id, so drop the colon that follows it.
    let body = |s: &&str| s.trim_start_matches([':', ' ', '\t']).trim().to_string();
    Some(segments.iter().map(body).collect::<Vec<_>>().join("\n\n"))
}

static HTML_EMPHASIS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)</?(?:b|strong|em|i|u)>").unwrap());
static LATEX_EMPHASIS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\text(?:bf|it)\{([^{}]*)\}").unwrap());
static PARTICIPANT_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bparticipant\s*(?:id\s*)?#?\s*:?\s*(\d+)\b").unwrap());
static LIKELIHOOD_ANCHOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)likelihood").unwrap());
static SLASH_SEVEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d+)\s*/\s*7\b").unwrap());
static WORD_OUT_OF_SEVEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(zero|one|two|three|four|five|six|seven|eight|nine|ten)\s+(?:out\s+of|/)\s*(?:7|seven)\b")
        .unwrap()
});
static SCORE_ANCHOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bphq[\s-]?8\s+score\s*:\s*").unwrap());
static SUM_EXPRESSION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+(?:\s*\+\s*\d+)+)\s*=\s*(\d+)").unwrap());
static LEADING_INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)").unwrap());
static ITEM_SCORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bscore\s*:\s*(\d+)").unwrap());
static PHQ_SUFFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)phq[\s-]?8\s*$").unwrap());
static VERDICT_PHRASE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:(?:do|does|did|can|could|would)\s*(?:not|n't)\s+(?:fully\s+|entirely\s+|completely\s+)?agree|disagree[sd]?|agree[sd]?)\b",
    )
    .unwrap()
});
static REVISED_SCORE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:revised|re-?evaluated|reassessed|updated)\s+(?:phq[\s-]?8\s+)?score\s*(?:of|is|:|=)?\s*(\d+)\b",
    )
    .unwrap()
});

/// Remove markdown, HTML and LaTeX emphasis so anchors and numbers are contiguous.
pub fn strip_emphasis(text: &str) -> String {
    let text = LATEX_EMPHASIS.replace_all(text, "$1");
    let text = HTML_EMPHASIS.replace_all(&text, "");
    text.replace("__", "").replace(['*', '`'], "")
}

fn participant_headers(text: &str) -> Vec<(usize, usize, Option<u32>)> {
    PARTICIPANT_HEADER
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            (m.start(), m.end(), c[1].parse().ok())
        })
        .collect()
}

/// Text belonging to `id`: every span from one of its headers to the next
/// header. A reply for a single participant with no headers at all is one
/// segment.
fn segments_for<'a>(
    text: &'a str,
    headers: &[(usize, usize, Option<u32>)],
    id: u32,
    n_expected: usize,
) -> Vec<&'a str> {
    if headers.is_empty() {
        return if n_expected == 1 { vec![text] } else { Vec::new() };
    }
    headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.2 == Some(id))
        .map(|(i, h)| {
            let end = headers.get(i + 1).map_or(text.len(), |next| next.0);
            &text[h.1..end]
        })
        .collect()
}

fn word_value(word: &str) -> u64 {
    match word.to_ascii_lowercase().as_str() {
        "zero" => 0,
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        _ => 10,
    }
}

fn likelihood_candidate(rule: Rule, segment: &str) -> Option<u64> {
    let anchor = LIKELIHOOD_ANCHOR.find(segment)?;
    let tail = &segment[anchor.end()..];
    match rule {
        Rule::LikelihoodSlashSeven => SLASH_SEVEN
            .captures_iter(tail)
            .last()
            .map(|c| c[1].parse().unwrap_or(u64::MAX)),
        Rule::LikelihoodWordNumber => WORD_OUT_OF_SEVEN.captures_iter(tail).last().map(|c| word_value(&c[1])),
        _ => None,
    }
}

struct SumExpression {
    start: usize,
    addends: Vec<u64>,
    stated: u64,
}

impl SumExpression {
    fn validate(&self) -> Result<Phq8Total, Vec<String>> {
        let mut errs = Vec::new();
        let sum: u64 = self.addends.iter().fold(0u64, |acc, &a| acc.saturating_add(a));
        if sum != self.stated {
            errs.push(format!(
                "arithmetic mismatch: addends sum to {sum}, stated total is {}",
                self.stated
            ));
        }
        if self.addends.len() != PHQ8_ITEMS {
            errs.push(format!("expected {PHQ8_ITEMS} addends, found {}", self.addends.len()));
        }
        if let Some(bad) = self.addends.iter().find(|&&a| a > u64::from(PHQ8_ITEM_MAX)) {
            errs.push(format!("addend {bad} out of range 0..=3"));
        }
        if self.stated > u64::from(PHQ8_MAX_TOTAL) {
            errs.push(format!("total {} out of range 0..=24", self.stated));
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let mut addends = [0u8; PHQ8_ITEMS];
        for (slot, &a) in addends.iter_mut().zip(&self.addends) {
            *slot = a as u8;
        }
        Ok(Phq8Total {
            total: self.stated as u8,
            addends: Some(addends),
        })
    }
}

fn parse_number(digits: &str) -> u64 {
    digits.parse().unwrap_or(u64::MAX)
}

/// Sum expressions directly following a `PHQ-8 Score:` anchor.
fn anchored_expressions(text: &str) -> impl DoubleEndedIterator<Item = SumExpression> + '_ {
    let anchors: Vec<usize> = SCORE_ANCHOR.find_iter(text).map(|m| m.end()).collect();
    anchors.into_iter().filter_map(move |pos| {
        let caps = SUM_EXPRESSION.captures(&text[pos..])?;
        Some(SumExpression {
            start: pos,
            addends: caps[1].split('+').map(|a| parse_number(a.trim())).collect(),
            stated: parse_number(&caps[2]),
        })
    })
}

/// Bare integers directly following a `PHQ-8 Score:` anchor.
fn anchored_integers(text: &str) -> impl DoubleEndedIterator<Item = u64> + '_ {
    let anchors: Vec<usize> = SCORE_ANCHOR.find_iter(text).map(|m| m.end()).collect();
    anchors.into_iter().filter_map(move |pos| {
        let rest = &text[pos..];
        let caps = LEADING_INTEGER.captures(rest)?;
        let after = rest[caps[1].len()..].trim_start();
        if after.starts_with(['+', '=']) {
            return None;
        }
        Some(parse_number(&caps[1]))
    })
}

/// `Score: k` lines that are not a `PHQ-8 Score:` total.
fn item_score_lines(text: &str) -> Vec<u64> {
    ITEM_SCORE
        .captures_iter(text)
        .filter(|c| {
            let start = c.get(0).unwrap().start();
            !PHQ_SUFFIX.is_match(text[..start].trim_end())
        })
        .map(|c| parse_number(&c[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn likelihood_with_bold_scores() {
        let reply = "Participant 308:\nLikelihood of Ongoing Mental Health Disorder: **6/7**. Strong indicators.";
        let out = parse_likelihood(reply, &[308]);
        assert_eq!(out[&308].value, Some(6));
        assert_eq!(out[&308].matched_rule.as_deref(), Some("likelihood/anchor-slash-7"));

        let html = "Participant 1: Likelihood of Ongoing Mental Health Disorder: <b>4/7</b>";
        assert_eq!(parse_likelihood(html, &[1])[&1].value, Some(4));
        let latex = "Participant 1: Likelihood of Ongoing Mental Health Disorder: \\textbf{3/7}.";
        assert_eq!(parse_likelihood(latex, &[1])[&1].value, Some(3));
    }

    #[test]
    fn likelihood_out_of_range() {
        let out = parse_likelihood("Participant 5: Likelihood of Ongoing Mental Health Disorder: 8/7", &[5]);
        assert_eq!(out[&5].value, None);
        assert!(out[&5].diagnostics.iter().any(|d| d.contains("out of range")));
        let zero = parse_likelihood("Likelihood: 0/7", &[5]);
        assert!(zero[&5].is_na());
    }

    #[test]
    fn likelihood_missing_participants_and_anchors() {
        let reply = "Participant 1: Likelihood of Ongoing Mental Health Disorder: 2/7";
        let out = parse_likelihood(reply, &[1, 2]);
        assert_eq!(out[&1].value, Some(2));
        assert!(out[&2].is_na());
        assert!(out[&2].diagnostics[0].contains("not found"));

        let no_anchor = parse_likelihood("Participant 1: I'd say 5/7 overall.", &[1]);
        assert!(no_anchor[&1]
            .diagnostics
            .iter()
            .any(|d| d.contains("no likelihood anchor")));
    }

    #[test]
    fn likelihood_single_participant_without_header() {
        let out = parse_likelihood(
            "Assessment...\nLikelihood of Ongoing Mental Health Disorder: 5/7",
            &[42],
        );
        assert_eq!(out[&42].value, Some(5));
        let two = parse_likelihood("Likelihood of Ongoing Mental Health Disorder: 5/7", &[1, 2]);
        assert!(two.values().all(ParseOutcome::is_na));
    }

    #[test]
    fn likelihood_last_match_in_segment_wins() {
        let reply = "Participant 3:\nLikelihood of Ongoing Mental Health Disorder: 4/7 at first glance, \
                     but on reflection Likelihood of Ongoing Mental Health Disorder: 5/7.";
        assert_eq!(parse_likelihood(reply, &[3])[&3].value, Some(5));
    }

    #[test]
    fn word_numbers_are_opt_in() {
        let reply = "Participant 9: Likelihood of Ongoing Mental Health Disorder: five out of 7.";
        assert!(parse_likelihood(reply, &[9])[&9].is_na());
        let rules = ParseRuleSet::v1().with_word_numbers();
        let out = rules.parse_likelihood(reply, &[9]);
        assert_eq!(out[&9].value, Some(5));
        assert_eq!(out[&9].matched_rule.as_deref(), Some("likelihood/anchor-word-number"));
        assert!(rules.parse_likelihood("Likelihood: ten out of seven", &[9])[&9].is_na());
    }

    #[test]
    fn phq8_total_expression_and_bare() {
        let out = parse_phq8_total("Estimated PHQ-8 Score: 2+3+1+2+1+2+1+1=13");
        assert_eq!(
            out.value,
            Some(Phq8Total {
                total: 13,
                addends: Some([2, 3, 1, 2, 1, 2, 1, 1])
            })
        );
        let spaced = parse_phq8_total("**Total PHQ-8 Score:** 2 + 3 + 0 + 2 + 0 + 2 + 1 + 0 = 10");
        assert_eq!(spaced.value.unwrap().total, 10);

        let bare = parse_phq8_total("Estimated PHQ-8 Score: 7 (mild)");
        assert_eq!(
            bare.value,
            Some(Phq8Total {
                total: 7,
                addends: None
            })
        );
        assert_eq!(bare.matched_rule.as_deref(), Some("phq8-total/bare-integer"));
    }

    #[test]
    fn phq8_total_validation_failures() {
        let mismatch = parse_phq8_total("Estimated PHQ-8 Score: 2+2=5");
        assert!(mismatch.is_na());
        assert!(mismatch.diagnostics.iter().any(|d| d.contains("arithmetic mismatch")));

        let bad_addend = parse_phq8_total("Estimated PHQ-8 Score: 4+3+1+2+1+2+1+0=14");
        assert!(bad_addend.is_na());
        assert!(bad_addend.diagnostics.iter().any(|d| d.contains("addend 4")));

        assert!(parse_phq8_total("Estimated PHQ-8 Score: 25").is_na());
        assert!(parse_phq8_total("The PHQ-8 score of 10 seems right").is_na());
        assert!(parse_phq8_total("").is_na());
    }

    #[test]
    fn phq8_expression_rule_precedes_bare_integer() {
        let reply = "Estimated PHQ-8 Score: 2+3+1+2+1+2+1+1=13\nLater: Estimated PHQ-8 Score: 9";
        assert_eq!(parse_phq8_total(reply).value.unwrap().total, 13);
    }

    #[test]
    fn item_lines_without_expression() {
        let reply = (0..8)
            .map(|i| format!("Item {i}: evidence. Score: {} (x)\n", i % 4))
            .collect::<String>();
        let out = parse_item_breakdown(&reply);
        assert_eq!(out.value, Some([0, 1, 2, 3, 0, 1, 2, 3]));
        assert_eq!(out.matched_rule.as_deref(), Some("items/score-lines"));

        let seven = (0..7).map(|_| "Score: 1\n").collect::<String>();
        let out = parse_item_breakdown(&seven);
        assert!(out.is_na());
        assert!(out.diagnostics.iter().any(|d| d.contains("found 7")));

        let bad = (0..8)
            .map(|i| format!("Score: {}\n", if i == 3 { 5 } else { 1 }))
            .collect::<String>();
        assert!(parse_item_breakdown(&bad).is_na());
    }

    #[test]
    fn item_lines_used_when_expression_is_invalid() {
        let mut reply = (0..8).map(|_| "Score: 1\n").collect::<String>();
        reply.push_str("Total PHQ-8 Score: 1+1+1+1+1+1+1+1 = 9\n");
        let out = parse_item_breakdown(&reply);
        assert_eq!(out.value, Some([1; 8]));
        assert!(out.diagnostics.iter().any(|d| d.contains("arithmetic mismatch")));
    }

    #[test]
    fn verdicts() {
        let agree = parse_verdict("I agree with the assigned score.");
        assert_eq!(
            agree.value,
            Some(VerdictParse {
                verdict: Verdict::Agree,
                revised_total: None
            })
        );

        let last_wins = parse_verdict("The assessment is agreeable... however I do not agree overall.");
        assert_eq!(last_wins.value.unwrap().verdict, Verdict::Disagree);

        for text in [
            "I disagree.",
            "I don't agree with it",
            "I cannot agree",
            "I do not fully agree.",
        ] {
            assert_eq!(parse_verdict(text).value.unwrap().verdict, Verdict::Disagree, "{text}");
        }
        let flip = parse_verdict("At first I disagreed, but now I agree.");
        assert_eq!(flip.value.unwrap().verdict, Verdict::Agree);

        let none = parse_verdict("The score is plausible.");
        assert!(none.is_na());
        assert_eq!(none.diagnostics, vec!["no verdict phrase".to_string()]);
    }

    #[test]
    fn revised_totals() {
        let out = parse_verdict("I do not agree. The revised PHQ-8 score of 12 fits better.");
        assert_eq!(out.value.unwrap().revised_total, Some(12));

        let expr = parse_verdict("I do not agree.\nTotal PHQ-8 Score: 1+1+1+1+1+1+1+1 = 8");
        assert_eq!(expr.value.unwrap().revised_total, Some(8));

        let before = parse_verdict("Total PHQ-8 Score: 1+1+1+1+1+1+1+1 = 8\nI agree.");
        assert_eq!(before.value.unwrap().revised_total, None);

        let out_of_range = ParseRuleSet::v1().parse_revised_total("revised score of 30");
        assert!(out_of_range.is_na());
    }

    const FILLER: [&str; 8] = [
        "the",
        "mood",
        "seems",
        "stable",
        "overall",
        "note",
        "this",
        "preliminary",
    ];

    fn prose() -> impl Strategy<Value = String> {
        proptest::collection::vec(0usize..FILLER.len(), 0..12)
            .prop_map(|idx| idx.into_iter().map(|i| FILLER[i]).collect::<Vec<_>>().join(" "))
    }

    fn emphasize_digits(text: &str) -> String {
        let re = Regex::new(r"\d+").unwrap();
        re.replace_all(text, "**$0**").into_owned()
    }

    const NOISE_FIXTURES: [&str; 4] = [
        "Participant 300:\nLikelihood of Ongoing Mental Health Disorder: 2/7.\n\nParticipant 306:\nLikelihood of Ongoing Mental Health Disorder: 3/7.",
        "Estimated PHQ-8 Score: 2+3+1+2+1+2+1+1=13 (moderate)",
        "Score: 2\nScore: 3\nScore: 0\nTotal PHQ-8 Score: 2+3+0+2+0+2+1+0 = 10",
        "I do not agree with the assessment. The revised PHQ-8 score of 10 fits.",
    ];

    fn all_outcomes(text: &str) -> String {
        format!(
            "{:?}|{:?}|{:?}|{:?}",
            parse_likelihood(text, &[300, 306])
                .values()
                .map(|o| o.value)
                .collect::<Vec<_>>(),
            parse_phq8_total(text).value,
            parse_item_breakdown(text).value,
            parse_verdict(text).value,
        )
    }

    proptest! {
        #[test]
        fn noise_does_not_change_values(idx in 0usize..4, lead in prose(), trail in prose(), bold in any::<bool>()) {
            let base = NOISE_FIXTURES[idx];
            let body = if bold { emphasize_digits(base) } else { base.to_string() };
            let noisy = format!("{lead}\n{body}\n{trail}");
            prop_assert_eq!(all_outcomes(&noisy), all_outcomes(base));
        }

        #[test]
        fn parsing_is_idempotent(text in "[A-Za-z0-9 :/+=*\n.-]{0,200}") {
            prop_assert_eq!(all_outcomes(&text), all_outcomes(&text));
        }

        #[test]
        fn values_stay_in_range(
            parts in proptest::collection::vec(
                prop_oneof![
                    Just("Participant 1: ".to_string()),
                    Just("Likelihood ".to_string()),
                    Just("PHQ-8 Score: ".to_string()),
                    Just("Score: ".to_string()),
                    Just("revised score of ".to_string()),
                    Just(" I agree ".to_string()),
                    (0u32..40).prop_map(|n| n.to_string()),
                    Just("/7 ".to_string()),
                    Just("+".to_string()),
                    Just("=".to_string()),
                    Just("\n".to_string()),
                ],
                0..40,
            )
        ) {
            let text: String = parts.concat();
            for o in parse_likelihood(&text, &[1]).values() {
                if let Some(v) = o.value { prop_assert!((1..=7).contains(&v)); }
            }
            if let Some(t) = parse_phq8_total(&text).value {
                prop_assert!(t.total <= 24);
                if let Some(a) = t.addends {
                    prop_assert!(a.iter().all(|&x| x <= 3));
                    prop_assert_eq!(a.iter().map(|&x| u32::from(x)).sum::<u32>(), u32::from(t.total));
                }
            }
            if let Some(items) = parse_item_breakdown(&text).value {
                prop_assert!(items.iter().all(|&x| x <= 3));
            }
            if let Some(v) = parse_verdict(&text).value {
                prop_assert!(v.revised_total.is_none_or(|t| t <= 24));
            }
        }

        #[test]
        fn segments_are_isolated(order in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle()) {
            let ids = [300u32, 306, 308, 309, 311];
            let scores = [2u8, 3, 6, 5, 7];
            let reply: String = order
                .iter()
                .map(|&i| format!("Participant {}:\nNotes.\nLikelihood of Ongoing Mental Health Disorder: {}/7.\n\n", ids[i], scores[i]))
                .collect();
            let out = parse_likelihood(&reply, &ids);
            for (id, score) in ids.iter().zip(scores) {
                prop_assert_eq!(out[id].value, Some(score));
            }
        }
    }
}
