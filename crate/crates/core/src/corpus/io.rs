use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Dialogue, LengthCutoff, Turn};
use crate::error::{Error, Result};

/// Version written in the header line of transcript and dataset files.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff: Option<LengthCutoff>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    dialogue_id: String,
    #[serde(default)]
    rating: Option<u8>,
    turns: Vec<Turn>,
}

/// Reads a line-oriented JSON transcript file.
pub fn ingest_transcripts(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcripts(&text)
}

pub fn parse_transcripts(text: &str) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        if std::mem::take(&mut first) && line.contains("\"format_version\"") {
            let header: Header = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            if header.format_version != FORMAT_VERSION {
                return Err(parse_err(format!(
                    "unsupported format_version {}",
                    header.format_version
                )));
            }
            corpus.cutoff = header.cutoff;
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        validate(&record).map_err(parse_err)?;
        if !seen.insert(record.dialogue_id.clone()) {
            return Err(Error::DuplicateId(record.dialogue_id));
        }
        corpus.dialogues.push(Dialogue {
            id: record.dialogue_id,
            turns: record.turns,
            rating: record.rating,
        });
    }
    Ok(corpus)
}

fn validate(record: &Record) -> std::result::Result<(), String> {
    if let Some(r) = record.rating {
        if !(1..=5).contains(&r) {
            return Err(format!("rating {r} outside 1..5"));
        }
    }
    let mut last = 0.0;
    for (i, turn) in record.turns.iter().enumerate() {
        if turn.agent.is_empty() {
            return Err(format!("turn {i} has an empty agent"));
        }
        if turn.text.is_empty() && !turn.is_user() {
            return Err(format!("system turn {i} has empty text"));
        }
        if !turn.timestamp.is_finite() || turn.timestamp < 0.0 {
            return Err(format!("turn {i} has invalid timestamp {}", turn.timestamp));
        }
        if turn.timestamp < last {
            return Err(format!("turn {i} timestamp decreases"));
        }
        last = turn.timestamp;
    }
    Ok(())
}

/// Serializes a corpus, header line first.
pub fn serialize_transcripts(corpus: &Corpus) -> String {
    let header = Header {
        format_version: FORMAT_VERSION,
        cutoff: corpus.cutoff,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for d in &corpus.dialogues {
        let record = Record {
            dialogue_id: d.id.clone(),
            rating: d.rating,
            turns: d.turns.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_transcripts(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_transcripts(corpus)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::testutil::dialogue;
    use proptest::prelude::*;

    const FIXTURE: &str = r#"{"dialogue_id": "a", "rating": 4, "turns": [{"agent": "user", "text": "hi", "timestamp": 1.0}, {"agent": "newsbot", "text": "hello", "timestamp": 2.0}, {"agent": "user", "text": "news", "timestamp": 3.5}, {"agent": "newsbot", "text": "here", "timestamp": 4.0}]}
{"dialogue_id": "b", "rating": null, "turns": [{"agent": "user", "text": "a", "timestamp": 0}, {"agent": "persona", "text": "b", "timestamp": 1}, {"agent": "user", "text": "", "timestamp": 2}, {"agent": "persona", "text": "d", "timestamp": 3}, {"agent": "user", "text": "e", "timestamp": 4}, {"agent": "persona", "text": "f", "timestamp": 5}]}
"#;

    #[test]
    fn parses_fixture() {
        let corpus = parse_transcripts(FIXTURE).unwrap();
        let lengths: Vec<usize> = corpus.dialogues.iter().map(Dialogue::len).collect();
        assert_eq!(lengths, vec![4, 6]);
        assert_eq!(corpus.dialogues[0].rating, Some(4));
        assert_eq!(corpus.dialogues[1].rating, None);
        assert_eq!(corpus.dialogues[0].turns[2].timestamp, 3.5);
    }

    #[test]
    fn missing_turns_names_the_line() {
        let text = format!("{}{{\"dialogue_id\": \"c\", \"rating\": 2}}\n", FIXTURE);
        match parse_transcripts(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("turns"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let first = FIXTURE.lines().next().unwrap();
        let text = format!("{first}\n{first}\n");
        assert!(matches!(parse_transcripts(&text), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn invalid_rating_and_timestamps_are_rejected() {
        let bad_rating = r#"{"dialogue_id": "x", "rating": 7, "turns": []}"#;
        assert!(matches!(
            parse_transcripts(bad_rating),
            Err(Error::Parse { line: 1, .. })
        ));
        let backwards = r#"{"dialogue_id": "x", "turns": [{"agent": "user", "text": "a", "timestamp": 5}, {"agent": "bot", "text": "b", "timestamp": 4}]}"#;
        assert!(parse_transcripts(backwards).is_err());
    }

    #[test]
    fn header_carries_cutoff_and_version() {
        let mut corpus = Corpus::new(vec![dialogue("a", 4, Some(3))]);
        corpus.cutoff = Some(LengthCutoff { p95: 17, strict: false });
        let text = serialize_transcripts(&corpus);
        assert!(text.starts_with("{\"format_version\":1"));
        assert_eq!(parse_transcripts(&text).unwrap(), corpus);
        let future = text.replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(parse_transcripts(&future).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = parse_transcripts(FIXTURE).unwrap();
        write_transcripts(&corpus, &path).unwrap();
        assert_eq!(ingest_transcripts(&path).unwrap(), corpus);
        assert!(matches!(
            ingest_transcripts(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    fn arb_dialogue() -> impl Strategy<Value = Dialogue> {
        (
            "[a-z0-9]{1,8}",
            proptest::option::of(1u8..=5),
            proptest::collection::vec(("(user|newsbot|persona)", "[ -~]{1,20}", 0.0f64..10.0), 0..8),
        )
            .prop_map(|(id, rating, raw)| {
                let mut t = 0.0;
                let turns = raw
                    .into_iter()
                    .map(|(agent, text, dt)| {
                        t += dt;
                        Turn::new(agent, text, t)
                    })
                    .collect();
                Dialogue { id, turns, rating }
            })
    }

    proptest! {
        #[test]
        fn serialize_then_ingest_is_identity(dialogues in proptest::collection::vec(arb_dialogue(), 0..6)) {
            let mut seen = HashSet::new();
            let dialogues: Vec<Dialogue> = dialogues.into_iter().filter(|d| seen.insert(d.id.clone())).collect();
            let corpus = Corpus::new(dialogues);
            prop_assert_eq!(parse_transcripts(&serialize_transcripts(&corpus)).unwrap(), corpus);
        }
    }
}
