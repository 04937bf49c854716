/// Default per-utterance cap on word tokens.
pub const MAX_UTTERANCE_TOKENS: usize = 30;

/// Agent tag used for entity tokens.
pub const ENTITY_TAG: &str = "ENT";

/// Lowercased words. Letters, digits and word-internal apostrophes are kept;
/// every other character separates words.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' || ch == '\u{2019}' {
            let ch = if ch == '\u{2019}' { '\'' } else { ch };
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            push_word(&mut out, &mut current);
        }
    }
    if !current.is_empty() {
        push_word(&mut out, &mut current);
    }
    out
}

fn push_word(out: &mut Vec<String>, current: &mut String) {
    let trimmed = current.trim_matches('\'');
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    current.clear();
}

/// Words of `text` joined by single spaces; used for phrase-list lookups.
pub fn normalize_phrase(text: &str) -> String {
    words(text).join(" ")
}

pub fn entity_token(entity: &str) -> String {
    format!("{ENTITY_TAG}|{entity}")
}

/// Prefixes each word with its agent (`user|hello`), keeps the first
/// `max_words` words, then appends one `ENT|<entity>` token per entity.
pub fn tokenize_turn(agent: &str, text: &str, entities: &[String], max_words: usize) -> Vec<String> {
    let mut tokens: Vec<String> = words(text)
        .into_iter()
        .take(max_words)
        .map(|w| format!("{agent}|{w}"))
        .collect();
    tokens.extend(entities.iter().map(|e| entity_token(e)));
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;
    use crate::text::TextAnalyzer;

    #[test]
    fn single_word_user_turn() {
        let analyzer = TextAnalyzer::default();
        let turn = Turn::new("user", "Hello!", 0.0);
        assert_eq!(analyzer.tokenize(&turn), vec!["user|hello"]);
    }

    #[test]
    fn word_agent_tokens_with_entity() {
        let analyzer = TextAnalyzer::default();
        let turn = Turn::new("newsbot", "Darth Vader returns", 0.0);
        assert_eq!(
            analyzer.tokenize(&turn),
            vec!["newsbot|darth", "newsbot|vader", "newsbot|returns", "ENT|darth_vader"]
        );
    }

    #[test]
    fn truncates_before_appending_entities() {
        let text: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let text = format!("{} about Harry Potter", text.join(" "));
        let tokens = tokenize_turn("user", &text, &["harry_potter".into()], MAX_UTTERANCE_TOKENS);
        assert_eq!(tokens.len(), 31);
        assert_eq!(tokens[29], "user|w29");
        assert_eq!(tokens[30], "ENT|harry_potter");
    }

    #[test]
    fn apostrophes_stay_inside_words() {
        assert_eq!(words("I don't know, 'really'."), vec!["i", "don't", "know", "really"]);
        assert!(words("").is_empty());
        assert!(words("?!. ,").is_empty());
    }

    #[test]
    fn tokenize_is_idempotent_on_its_words() {
        let once = words("Great, THANK you!");
        let twice = words(&once.join(" "));
        assert_eq!(once, twice);
    }
}
