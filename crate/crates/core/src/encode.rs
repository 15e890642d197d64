//! Token-sequence encoding of per-user event histories and k-gram
//! motif extraction.
//!
//! A user's history up to a cutoff week becomes an alternating stream
//! of event tokens (`J` join, `S` send, `R` receive) and gap tokens
//! (`A`–`D`, discretized inter-event intervals). Motifs are the
//! length-k windows slid over the full interleaved stream.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::{EventKind, EventStore};
use crate::{Error, Result, UserId};

/// Sequence alphabet: three event tokens and four gap tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    J,
    S,
    R,
    A,
    B,
    C,
    D,
}

impl Token {
    pub fn is_event(self) -> bool {
        matches!(self, Token::J | Token::S | Token::R)
    }

    pub fn is_gap(self) -> bool {
        !self.is_event()
    }

    pub fn symbol(self) -> char {
        match self {
            Token::J => 'J',
            Token::S => 'S',
            Token::R => 'R',
            Token::A => 'A',
            Token::B => 'B',
            Token::C => 'C',
            Token::D => 'D',
        }
    }
}

/// Gap-bucket boundaries in seconds: ten minutes, two hours, one day.
const GAP_BOUNDS: [i64; 3] = [600, 7_200, 86_400];

/// Discretize an inter-event gap into its bucket token.
///
/// `< 10min` is `A`, `[10min, 2h)` is `B`, `[2h, 1day)` is `C`, and
/// `>= 1day` is `D`. A negative gap means events arrived out of order.
pub fn bucket_gap(delta: i64) -> Result<Token> {
    if delta < 0 {
        return Err(Error::NegativeGap { delta });
    }
    Ok(if delta < GAP_BOUNDS[0] {
        Token::A
    } else if delta < GAP_BOUNDS[1] {
        Token::B
    } else if delta < GAP_BOUNDS[2] {
        Token::C
    } else {
        Token::D
    })
}

/// One user's alternating event/gap token stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub user: UserId,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    /// Compact symbol string, e.g. `JASBSDRAS`.
    pub fn symbols(&self) -> String {
        self.tokens.iter().map(|t| t.symbol()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Per-user k-gram counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifVector {
    pub user: UserId,
    pub k: usize,
    pub counts: BTreeMap<String, u32>,
}

impl MotifVector {
    /// Sum of all k-gram counts; equals `max(0, len - k + 1)`.
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }
}

/// Ordered k-gram vocabulary fixing the feature-column layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifVocabulary {
    k: usize,
    kgrams: Vec<String>,
}

impl MotifVocabulary {
    /// Collect the distinct k-grams observed across a population,
    /// sorted lexicographically.
    pub fn from_population(vectors: &[MotifVector]) -> Self {
        let k = vectors.first().map(|v| v.k).unwrap_or(0);
        let mut kgrams: Vec<String> = vectors
            .iter()
            .flat_map(|v| v.counts.keys().cloned())
            .collect();
        kgrams.sort();
        kgrams.dedup();
        MotifVocabulary { k, kgrams }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kgrams(&self) -> &[String] {
        &self.kgrams
    }

    pub fn len(&self) -> usize {
        self.kgrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kgrams.is_empty()
    }
}

/// Population motif-count matrix with a fixed column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifMatrix {
    pub users: Vec<UserId>,
    pub kgrams: Vec<String>,
    pub counts: Vec<Vec<u32>>,
}

/// Encode one user's history up to the end of `cutoff_week` as a token
/// sequence: `J`, then alternating gap and event tokens for every
/// send/receive inside the window, ordered by time with simultaneous
/// sends before receives.
pub fn encode_user(store: &EventStore, user: &UserId, cutoff_week: u32) -> Result<TokenSequence> {
    let indices = store
        .user_event_indices(user)
        .ok_or_else(|| Error::UnknownUser { user: user.clone() })?;
    let join_week = store
        .join_week(user)
        .expect("known users always have a join week");
    if join_week > cutoff_week {
        return Err(Error::NotYetJoined {
            user: user.clone(),
            week: cutoff_week,
        });
    }

    let window_end = store.end_of_week(cutoff_week.min(store.horizon_weeks()));
    let events = store.events();
    let mut tokens = vec![Token::J];
    let mut prev_t = store
        .join_time(user)
        .expect("known users always have a join time");
    for &idx in indices {
        let event = &events[idx];
        if event.timestamp >= window_end {
            break;
        }
        let token = match event.kind {
            EventKind::Join => continue,
            EventKind::Send => Token::S,
            EventKind::Recv => Token::R,
        };
        tokens.push(bucket_gap(event.timestamp - prev_t)?);
        tokens.push(token);
        prev_t = event.timestamp;
    }
    Ok(TokenSequence {
        user: user.clone(),
        tokens,
    })
}

/// Count every width-k window over the full token list, with
/// multiplicity. Sequences shorter than `k` yield an empty mapping.
pub fn count_kgrams(seq: &TokenSequence, k: usize) -> Result<MotifVector> {
    if k < 1 {
        return Err(Error::InvalidKgramLength { k });
    }
    let symbols: Vec<char> = seq.tokens.iter().map(|t| t.symbol()).collect();
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    if symbols.len() >= k {
        for window in symbols.windows(k) {
            let gram: String = window.iter().collect();
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(MotifVector {
        user: seq.user.clone(),
        k,
        counts,
    })
}

/// Project population motif vectors onto a fixed vocabulary.
///
/// One row per user in ascending user-id order, one column per
/// vocabulary k-gram; k-grams outside the vocabulary are dropped.
pub fn vectorize(vectors: &[MotifVector], vocabulary: &MotifVocabulary) -> MotifMatrix {
    let mut ordered: Vec<&MotifVector> = vectors.iter().collect();
    ordered.sort_by(|a, b| a.user.cmp(&b.user));
    let column_of: BTreeMap<&str, usize> = vocabulary
        .kgrams()
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();

    let mut users = Vec::with_capacity(ordered.len());
    let mut counts = Vec::with_capacity(ordered.len());
    for vector in ordered {
        let mut row = vec![0u32; vocabulary.len()];
        for (gram, &count) in &vector.counts {
            if let Some(&col) = column_of.get(gram.as_str()) {
                row[col] = count;
            }
        }
        users.push(vector.user.clone());
        counts.push(row);
    }
    MotifMatrix {
        users,
        kgrams: vocabulary.kgrams().to_vec(),
        counts,
    }
}

/// Collapse a motif vector to its total activity count, the
/// order-blind single feature used by the ablation runs.
pub fn total_activity(vector: &MotifVector) -> u64 {
    vector.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_store, parse_messages};
    use proptest::prelude::*;
    use std::io::Cursor;

    #[test]
    fn gap_buckets_at_boundaries() {
        assert_eq!(bucket_gap(0).unwrap(), Token::A);
        assert_eq!(bucket_gap(599).unwrap(), Token::A);
        assert_eq!(bucket_gap(600).unwrap(), Token::B);
        assert_eq!(bucket_gap(7_199).unwrap(), Token::B);
        assert_eq!(bucket_gap(7_200).unwrap(), Token::C);
        assert_eq!(bucket_gap(86_399).unwrap(), Token::C);
        assert_eq!(bucket_gap(86_400).unwrap(), Token::D);
        assert!(bucket_gap(-1).is_err());
    }

    #[test]
    fn encodes_reference_sequence() {
        // u joins at 0 (first activity), then sends at 300 (gap A),
        // 4200 (B), receives at 94200 (D), sends at 94500 (A).
        let text = "u a 300\nu b 4200\nx u 94200\nu c 94500\nu d 2000000\n";
        let messages = parse_messages(Cursor::new(text)).unwrap();
        // First activity of u is 300, so pin the join with a side record.
        let joins = vec![crate::ingest::JoinRecord {
            user: UserId::new("u"),
            timestamp: 0,
        }];
        let store = build_store(&messages, Some(&joins), 20).unwrap();
        let seq = encode_user(&store, &UserId::new("u"), 2).unwrap();
        assert_eq!(seq.symbols(), "JASBSDRAS");
    }

    #[test]
    fn join_only_user_is_bare_j() {
        let messages = parse_messages(Cursor::new("a b 100\n")).unwrap();
        let joins = vec![crate::ingest::JoinRecord {
            user: UserId::new("z"),
            timestamp: 100,
        }];
        let store = build_store(&messages, Some(&joins), 20).unwrap();
        let seq = encode_user(&store, &UserId::new("z"), 5).unwrap();
        assert_eq!(seq.symbols(), "J");
    }

    #[test]
    fn cutoff_excludes_later_messages() {
        let week = crate::ingest::WEEK_SECONDS;
        let text = format!("u v 0\nu v {}\n", 3 * week + 10);
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        // Week-1 cutoff sees the first send only; the join coincides
        // with it (gap 0 -> A).
        let seq = encode_user(&store, &UserId::new("u"), 1).unwrap();
        assert_eq!(seq.symbols(), "JAS");
        // A user whose only message lies beyond the cutoff keeps a bare J.
        let seq = encode_user(&store, &UserId::new("v"), 1).unwrap();
        assert_eq!(seq.symbols(), "JAR");
        let text2 = format!("u v {}\nw v {}\n", 3 * week + 10, 0);
        let messages2 = parse_messages(Cursor::new(text2)).unwrap();
        let joins2 = vec![crate::ingest::JoinRecord {
            user: UserId::new("u"),
            timestamp: 0,
        }];
        let store2 = build_store(&messages2, Some(&joins2), 20).unwrap();
        let seq2 = encode_user(&store2, &UserId::new("u"), 2).unwrap();
        assert_eq!(seq2.symbols(), "J");
    }

    #[test]
    fn simultaneous_send_precedes_recv() {
        let text = "u v 100\nw u 100\n";
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let seq = encode_user(&store, &UserId::new("u"), 1).unwrap();
        assert_eq!(seq.symbols(), "JASAR");
    }

    #[test]
    fn unknown_user_errors() {
        let messages = parse_messages(Cursor::new("a b 0\n")).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        assert!(matches!(
            encode_user(&store, &UserId::new("nope"), 1),
            Err(Error::UnknownUser { .. })
        ));
    }

    #[test]
    fn counts_simple_trigram_windows() {
        let seq = TokenSequence {
            user: UserId::new("u"),
            tokens: vec![Token::J, Token::A, Token::S, Token::B, Token::S],
        };
        let mv = count_kgrams(&seq, 3).unwrap();
        let expected: BTreeMap<String, u32> = [("JAS", 1), ("ASB", 1), ("SBS", 1)]
            .into_iter()
            .map(|(g, c)| (g.to_string(), c))
            .collect();
        assert_eq!(mv.counts, expected);

        let repeated = TokenSequence {
            user: UserId::new("u"),
            tokens: vec![Token::J, Token::A, Token::S, Token::A, Token::S],
        };
        let mv = count_kgrams(&repeated, 3).unwrap();
        let expected: BTreeMap<String, u32> = [("JAS", 1), ("ASA", 1), ("SAS", 1)]
            .into_iter()
            .map(|(g, c)| (g.to_string(), c))
            .collect();
        assert_eq!(mv.counts, expected);
    }

    #[test]
    fn short_sequence_yields_empty_counts() {
        let seq = TokenSequence {
            user: UserId::new("u"),
            tokens: vec![Token::J],
        };
        let mv = count_kgrams(&seq, 3).unwrap();
        assert!(mv.counts.is_empty());
        assert!(count_kgrams(&seq, 0).is_err());
    }

    #[test]
    fn vectorize_maps_to_fixed_columns() {
        let vocab = MotifVocabulary {
            k: 3,
            kgrams: vec!["ASB".into(), "JAS".into(), "SBS".into()],
        };
        let mv = MotifVector {
            user: UserId::new("u"),
            k: 3,
            counts: [("JAS".to_string(), 1), ("SBS".to_string(), 2)]
                .into_iter()
                .collect(),
        };
        let matrix = vectorize(&[mv], &vocab);
        assert_eq!(matrix.counts, vec![vec![0, 1, 2]]);

        let empty = MotifVector {
            user: UserId::new("v"),
            k: 3,
            counts: BTreeMap::new(),
        };
        let matrix = vectorize(&[empty], &vocab);
        assert_eq!(matrix.counts, vec![vec![0, 0, 0]]);
    }

    #[test]
    fn identical_sequences_vectorize_identically() {
        let tokens = vec![Token::J, Token::A, Token::S, Token::B, Token::S];
        let a = count_kgrams(
            &TokenSequence {
                user: UserId::new("1"),
                tokens: tokens.clone(),
            },
            2,
        )
        .unwrap();
        let b = count_kgrams(
            &TokenSequence {
                user: UserId::new("2"),
                tokens,
            },
            2,
        )
        .unwrap();
        let vocab = MotifVocabulary::from_population(&[a.clone(), b.clone()]);
        let matrix = vectorize(&[a, b], &vocab);
        assert_eq!(matrix.counts[0], matrix.counts[1]);
    }

    #[test]
    fn total_activity_sums_counts() {
        let mv = MotifVector {
            user: UserId::new("u"),
            k: 3,
            counts: [("JAS".to_string(), 1), ("ASB".to_string(), 1), ("SBS".to_string(), 1)]
                .into_iter()
                .collect(),
        };
        assert_eq!(total_activity(&mv), 3);
        let empty = MotifVector {
            user: UserId::new("u"),
            k: 3,
            counts: BTreeMap::new(),
        };
        assert_eq!(total_activity(&empty), 0);
    }

    fn token_strategy() -> impl Strategy<Value = Token> {
        prop_oneof![
            Just(Token::J),
            Just(Token::S),
            Just(Token::R),
            Just(Token::A),
            Just(Token::B),
            Just(Token::C),
            Just(Token::D),
        ]
    }

    proptest! {
        #[test]
        fn count_conservation(tokens in prop::collection::vec(token_strategy(), 0..200), k in 1usize..6) {
            let seq = TokenSequence { user: UserId::new("u"), tokens };
            let mv = count_kgrams(&seq, k).unwrap();
            let expected = seq.len().saturating_sub(k - 1);
            prop_assert_eq!(mv.total(), expected as u64);
            for gram in mv.counts.keys() {
                prop_assert_eq!(gram.len(), k);
            }
        }

        #[test]
        fn matches_naive_counter(tokens in prop::collection::vec(token_strategy(), 0..400), k in 1usize..5) {
            let seq = TokenSequence { user: UserId::new("u"), tokens };
            let fast = count_kgrams(&seq, k).unwrap();
            let naive = crate::oracle::naive_kgram_counts(&seq.symbols(), k);
            prop_assert_eq!(fast.counts, naive);
        }

        #[test]
        fn random_gaps_bucket_consistently(delta in 0i64..1_000_000) {
            let token = bucket_gap(delta).unwrap();
            prop_assert!(token.is_gap());
        }
    }

    #[test]
    fn encoded_sequences_alternate_and_are_prefixes() {
        let week = crate::ingest::WEEK_SECONDS;
        let text = format!(
            "u v 0\nv u 500\nu w {}\nw u {}\nu v {}\n",
            week + 30,
            2 * week + 7_000,
            3 * week + 100_000
        );
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let user = UserId::new("u");
        let mut prev: Option<TokenSequence> = None;
        for cutoff in 1..=5 {
            let seq = encode_user(&store, &user, cutoff).unwrap();
            // Alternation: events at even positions, gaps at odd ones.
            for (i, t) in seq.tokens.iter().enumerate() {
                if i % 2 == 0 {
                    assert!(t.is_event(), "position {i} in {}", seq.symbols());
                } else {
                    assert!(t.is_gap(), "position {i} in {}", seq.symbols());
                }
            }
            assert!(seq.len() % 2 == 1, "odd length, got {}", seq.len());
            if let Some(p) = prev {
                assert!(seq.symbols().starts_with(&p.symbols()));
            }
            prev = Some(seq);
        }
    }

    #[test]
    fn unigram_vector_is_token_histogram() {
        let seq = TokenSequence {
            user: UserId::new("u"),
            tokens: vec![Token::J, Token::A, Token::S, Token::A, Token::S],
        };
        let mv = count_kgrams(&seq, 1).unwrap();
        assert_eq!(mv.counts.get("J"), Some(&1));
        assert_eq!(mv.counts.get("A"), Some(&2));
        assert_eq!(mv.counts.get("S"), Some(&2));
    }
}
