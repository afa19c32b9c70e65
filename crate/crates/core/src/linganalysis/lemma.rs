use std::collections::{BTreeMap, BTreeSet};

/// Dictionary-first lemmatizer with a longest-suffix rule fallback.
#[derive(Debug, Clone, Default)]
pub struct Lemmatizer {
    forms: BTreeMap<String, String>,
    lemmas: BTreeSet<String>,
    /// Sorted by suffix length, longest first.
    rules: Vec<(String, String)>,
    min_stem: usize,
}

const MAX_RULE_PASSES: usize = 4;

impl Lemmatizer {
    pub fn new() -> Self {
        Lemmatizer {
            min_stem: 3,
            ..Default::default()
        }
    }

    /// Parse `<form> <lemma>` lines; `#` starts a comment.
    pub fn with_dictionary(mut self, text: &str) -> Self {
        for (form, lemma) in pairs(text) {
            self.lemmas.insert(lemma.clone());
            self.forms.insert(form, lemma);
        }
        self
    }

    /// Parse `<suffix> <replacement>` lines; a replacement of `-` means empty.
    pub fn with_rules(mut self, text: &str) -> Self {
        for (suffix, repl) in pairs(text) {
            let repl = if repl == "-" { String::new() } else { repl };
            self.rules.push((suffix, repl));
        }
        self.rules
            .sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then(a.0.cmp(&b.0)));
        self
    }

    pub fn add_form(&mut self, form: &str, lemma: &str) {
        self.lemmas.insert(lemma.to_string());
        self.forms.insert(form.to_string(), lemma.to_string());
    }

    pub fn is_known_lemma(&self, word: &str) -> bool {
        self.lemmas.contains(word)
    }

    /// Lemma of a lowercased word: dictionary lookup, then the suffix rules
    /// applied until nothing changes, then identity.
    pub fn lemmatize(&self, word: &str) -> String {
        if let Some(l) = self.forms.get(word) {
            return l.clone();
        }
        let mut current = word.to_string();
        for _ in 0..MAX_RULE_PASSES {
            if self.lemmas.contains(&current) {
                break;
            }
            match self.apply_rule(&current) {
                Some(next) if next != current => {
                    if let Some(l) = self.forms.get(&next) {
                        return l.clone();
                    }
                    current = next;
                }
                _ => break,
            }
        }
        current
    }

    fn apply_rule(&self, word: &str) -> Option<String> {
        let len = word.chars().count();
        self.rules.iter().find_map(|(suffix, repl)| {
            let sl = suffix.chars().count();
            if len >= sl + self.min_stem && word.ends_with(suffix.as_str()) {
                let stem = &word[..word.len() - suffix.len()];
                Some(format!("{stem}{repl}"))
            } else {
                None
            }
        })
    }
}

fn pairs(text: &str) -> impl Iterator<Item = (String, String)> + '_ {
    text.lines().filter_map(|line| {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => Some((a.to_lowercase(), b.to_lowercase())),
            _ => None,
        }
    })
}
