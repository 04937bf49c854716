use std::collections::BTreeSet;

use super::tokenize::words;

/// Named entities found by a capitalization heuristic plus gazetteer lookup.
///
/// Maximal runs of capitalized words become entities, except single-word runs
/// that open a sentence or are stopwords ("I", "Hello"). Gazetteer phrases
/// are matched case-insensitively on word boundaries. Entities are lowercased
/// with spaces replaced by underscores; duplicates keep their first position.
pub fn extract_entities(text: &str, gazetteer: &[String], stopwords: &BTreeSet<String>) -> Vec<String> {
    let mut found: Vec<String> = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    let mut run_opens_sentence = false;
    let mut sentence_start = true;

    let flush = |run: &mut Vec<&str>, opens_sentence: bool, found: &mut Vec<String>| {
        if run.is_empty() {
            return;
        }
        let normalized = words(&run.join(" "));
        let skip =
            normalized.is_empty() || (normalized.len() == 1 && (opens_sentence || stopwords.contains(&normalized[0])));
        if !skip {
            push_unique(found, normalized.join("_"));
        }
        run.clear();
    };

    for chunk in text.split_whitespace() {
        let core = chunk.trim_matches(|c: char| !c.is_alphanumeric());
        let capitalized = core.chars().next().is_some_and(char::is_uppercase);
        if capitalized {
            if run.is_empty() {
                run_opens_sentence = sentence_start;
            }
            run.push(core);
        } else {
            flush(&mut run, run_opens_sentence, &mut found);
        }
        let trailing = &chunk[chunk.trim_end_matches(|c: char| !c.is_alphanumeric()).len()..];
        if !trailing.is_empty() {
            flush(&mut run, run_opens_sentence, &mut found);
        }
        if !core.is_empty() || trailing.contains(['.', '!', '?']) {
            sentence_start = trailing.contains(['.', '!', '?']);
        }
    }
    flush(&mut run, run_opens_sentence, &mut found);

    let lowered = words(text);
    for phrase in gazetteer {
        let target = words(phrase);
        if target.is_empty() || target.len() > lowered.len() {
            continue;
        }
        if lowered.windows(target.len()).any(|w| w == target.as_slice()) {
            push_unique(&mut found, target.join("_"));
        }
    }
    found
}

fn push_unique(found: &mut Vec<String>, entity: String) {
    if !found.contains(&entity) {
        found.push(entity);
    }
}

/// Adjacent content-word bigrams (`w1_w2`), a cheap stand-in for noun phrases.
pub fn noun_phrases(text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    let ws = words(text);
    let content = |w: &String| !stopwords.contains(w) && w.chars().any(char::is_alphabetic);
    ws.windows(2)
        .filter(|pair| content(&pair[0]) && content(&pair[1]))
        .map(|pair| format!("{}_{}", pair[0], pair[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TextResources;
    use proptest::prelude::*;

    fn extract(text: &str) -> Vec<String> {
        let res = TextResources::default();
        extract_entities(text, &res.gazetteer, &res.stopwords)
    }

    #[test]
    fn capitalized_run_mid_sentence() {
        assert_eq!(extract("I met Harry Potter yesterday"), vec!["harry_potter"]);
    }

    #[test]
    fn lowercase_text_has_no_entities() {
        assert!(extract("hello there").is_empty());
    }

    #[test]
    fn gazetteer_match_without_capitals() {
        let stop = BTreeSet::new();
        let gaz = vec!["star wars".to_string()];
        assert_eq!(
            extract_entities("tell me about star wars", &gaz, &stop),
            vec!["star_wars"]
        );
    }

    #[test]
    fn sentence_initial_single_word_is_skipped() {
        assert!(extract("Hello!").is_empty());
        assert_eq!(extract("Yes. Paris is lovely. We saw Paris"), vec!["paris"]);
    }

    #[test]
    fn punctuation_breaks_runs_and_dedups() {
        assert_eq!(
            extract("we like Darth Vader, Luke Skywalker and Darth Vader"),
            vec!["darth_vader", "luke_skywalker"]
        );
    }

    #[test]
    fn bigrams_skip_stopwords() {
        let stop = TextResources::default().stopwords;
        assert_eq!(
            noun_phrases("the jedi council met the dark lord", &stop),
            vec!["jedi_council", "council_met", "dark_lord"]
        );
        assert!(noun_phrases("i don't know", &stop).is_empty());
    }

    proptest! {
        #[test]
        fn entities_are_lowercase_without_spaces(text in "[A-Za-z ,.!?']{0,60}") {
            for e in extract(&text) {
                prop_assert!(!e.chars().any(char::is_uppercase));
                prop_assert!(!e.contains(' '));
                prop_assert!(!e.is_empty());
            }
        }
    }
}
