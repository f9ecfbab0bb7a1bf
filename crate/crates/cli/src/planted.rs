//! Seeded corpus generation from a planted template specification. The
//! planted words and classes serve as the ground truth when judging what a
//! learned grammar recovered.

use std::collections::BTreeMap;

use gramwire::induction::Corpus;
use gramwire::Message;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// JSON specification: named word classes, sentence templates over those
/// classes, and how many sentences to sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub classes: BTreeMap<String, Vec<String>>,
    pub templates: Vec<Vec<String>>,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(CliError::input("sentence count must be positive"));
        }
        if self.templates.is_empty() {
            return Err(CliError::input("at least one template is required"));
        }
        for (name, words) in &self.classes {
            if words.is_empty() {
                return Err(CliError::Input(format!("class `{name}` has no words")));
            }
            for w in words {
                if w.is_empty() || w.contains(char::is_whitespace) {
                    return Err(CliError::Input(format!("bad word `{w}` in class `{name}`")));
                }
            }
        }
        for template in &self.templates {
            if template.is_empty() {
                return Err(CliError::input("empty template"));
            }
            for class in template {
                if !self.classes.contains_key(class) {
                    return Err(CliError::Input(format!(
                        "template references unknown class `{class}`"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Samples `count` sentences: template chosen uniformly, then each slot
    /// filled uniformly from its class. The same seed yields byte-identical
    /// output.
    pub fn generate(&self, seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |n: usize| (rng.next_u64() % n as u64) as usize;
        let mut messages = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let template = &self.templates[pick(self.templates.len())];
            let tokens: Vec<String> = template
                .iter()
                .map(|class| {
                    let words = &self.classes[class];
                    words[pick(words.len())].clone()
                })
                .collect();
            messages.push(Message::new(tokens));
        }
        Corpus::new("planted", messages)
    }

    /// Every distinct word planted across all classes, sorted.
    pub fn all_words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self
            .classes
            .values()
            .flatten()
            .map(String::as_str)
            .collect();
        words.sort_unstable();
        words.dedup();
        words
    }
}

/// The 18-word DET NOUN VERB specification used by the recovery checks:
/// 3 determiners, 10 nouns, 5 verbs, 500 sentences.
pub fn det_noun_verb_spec() -> PlantedSpec {
    let mut classes = BTreeMap::new();
    classes.insert(
        "DET".to_string(),
        ["the", "a", "every"].map(String::from).to_vec(),
    );
    classes.insert(
        "NOUN".to_string(),
        [
            "cat", "dog", "fish", "bird", "horse", "mouse", "cow", "sheep", "goat", "duck",
        ]
        .map(String::from)
        .to_vec(),
    );
    classes.insert(
        "VERB".to_string(),
        ["runs", "sleeps", "eats", "jumps", "swims"]
            .map(String::from)
            .to_vec(),
    );
    PlantedSpec {
        classes,
        templates: vec![vec![
            "DET".to_string(),
            "NOUN".to_string(),
            "VERB".to_string(),
        ]],
        count: 500,
        seed: 42,
    }
}

/// A high-redundancy specification: 8 fixed template sentences over a
/// 40-word vocabulary, sampled 200 times.
pub fn eight_template_spec() -> PlantedSpec {
    let sentences: [&[&str]; 8] = [
        &["please", "send", "the", "quarterly", "report"],
        &["system", "load", "is", "within", "limits"],
        &["backup", "completed", "without", "errors", "tonight"],
        &["meeting", "moved", "to", "thursday", "afternoon"],
        &["deploy", "finished", "on", "all", "nodes"],
        &["alert", "cleared", "after", "manual", "restart"],
        &["invoice", "approved", "by", "finance", "team"],
        &["shipment", "arrived", "at", "north", "dock"],
    ];
    let mut classes = BTreeMap::new();
    let mut templates = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        let mut template = Vec::new();
        for (j, word) in sentence.iter().enumerate() {
            let class = format!("W{i}{j}");
            classes.insert(class.clone(), vec![word.to_string()]);
            template.push(class);
        }
        templates.push(template);
    }
    PlantedSpec {
        classes,
        templates,
        count: 200,
        seed: 7,
    }
}
