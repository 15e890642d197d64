//! Seeded synthetic message-log generator with tunable
//! cumulative-advantage dynamics. Used as fixtures and oracles for the
//! correlation experiments, independent of any real dataset.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::ingest::{JoinRecord, Message, WEEK_SECONDS};
use crate::{Error, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_weeks: u32,
    /// Fraction of users joining after week 1.
    pub join_spread: f64,
    /// Expected messages per joined user per week.
    pub base_rate: f64,
    /// Probability a message targets a partner proportionally to
    /// (tie degree + 1) instead of uniformly.
    pub pref_strength: f64,
    /// Probability a first contact is answered within the same week.
    pub reply_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 200,
            n_weeks: 20,
            join_spread: 0.3,
            base_rate: 2.0,
            pref_strength: 0.8,
            reply_prob: 0.6,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::InvalidConfig {
                message: format!("need at least 2 users, got {}", self.n_users),
            });
        }
        if self.n_weeks < 1 {
            return Err(Error::InvalidConfig {
                message: "need at least one week".into(),
            });
        }
        if !(self.base_rate >= 0.0 && self.base_rate.is_finite()) {
            return Err(Error::InvalidConfig {
                message: format!("base_rate must be a finite non-negative rate, got {}", self.base_rate),
            });
        }
        for (name, p) in [
            ("join_spread", self.join_spread),
            ("pref_strength", self.pref_strength),
            ("reply_prob", self.reply_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig {
                    message: format!("{name} must lie in [0,1], got {p}"),
                });
            }
        }
        Ok(())
    }
}

/// Absolute epoch the synthetic log starts at; the first user joins
/// exactly here, anchoring week boundaries.
const SYNTH_EPOCH: i64 = 1_100_000_000;

/// Generate a message log plus explicit join records, fully
/// deterministic per seed. Joins always precede first messages, so the
/// output passes ingest validation as-is.
pub fn generate(config: &SynthConfig) -> Result<(Vec<Message>, Vec<JoinRecord>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_users;

    // Join offsets relative to the epoch. User 0 anchors week 1.
    let mut join_offsets = vec![0i64; n];
    for offset in join_offsets.iter_mut().skip(1) {
        let week = if config.n_weeks > 1 && rng.gen::<f64>() < config.join_spread {
            rng.gen_range(2..=config.n_weeks)
        } else {
            1
        };
        let week_start = i64::from(week - 1) * WEEK_SECONDS;
        *offset = week_start + rng.gen_range(0..WEEK_SECONDS);
    }

    let mut degree = vec![0usize; n];
    let mut sent = std::collections::HashSet::<(usize, usize)>::new();
    let mut tied = std::collections::HashSet::<(usize, usize)>::new();
    let mut messages: Vec<(i64, usize, usize)> = Vec::new();

    let register = |from: usize,
                        to: usize,
                        at: i64,
                        messages: &mut Vec<(i64, usize, usize)>,
                        sent: &mut std::collections::HashSet<(usize, usize)>,
                        tied: &mut std::collections::HashSet<(usize, usize)>,
                        degree: &mut Vec<usize>| {
        messages.push((at, from, to));
        sent.insert((from, to));
        let pair = (from.min(to), from.max(to));
        if sent.contains(&(to, from)) && tied.insert(pair) {
            degree[from] += 1;
            degree[to] += 1;
        }
    };

    for week in 1..=config.n_weeks {
        let week_start = i64::from(week - 1) * WEEK_SECONDS;
        let week_end = i64::from(week) * WEEK_SECONDS;
        for sender in 0..n {
            if join_offsets[sender] >= week_end {
                continue;
            }
            let count = if config.base_rate > 0.0 {
                let poisson = Poisson::new(config.base_rate).expect("validated rate");
                poisson.sample(&mut rng) as usize
            } else {
                0
            };
            for _ in 0..count {
                let earliest = week_start.max(join_offsets[sender]);
                if earliest >= week_end {
                    continue;
                }
                let at = rng.gen_range(earliest..week_end);
                let Some(target) = pick_target(sender, at, &join_offsets, &degree, config, &mut rng)
                else {
                    continue;
                };
                let first_contact =
                    !sent.contains(&(sender, target)) && !sent.contains(&(target, sender));
                register(
                    sender,
                    target,
                    at,
                    &mut messages,
                    &mut sent,
                    &mut tied,
                    &mut degree,
                );
                if first_contact && rng.gen::<f64>() < config.reply_prob {
                    let reply_at = rng.gen_range(at..week_end);
                    register(
                        target,
                        sender,
                        reply_at,
                        &mut messages,
                        &mut sent,
                        &mut tied,
                        &mut degree,
                    );
                }
            }
        }
    }

    messages.sort_by_key(|&(at, _, _)| at);
    let messages = messages
        .into_iter()
        .map(|(at, from, to)| Message::new(user_id(from), user_id(to), SYNTH_EPOCH + at))
        .collect();
    let joins = join_offsets
        .iter()
        .enumerate()
        .map(|(user, &offset)| JoinRecord {
            user: user_id(user),
            timestamp: SYNTH_EPOCH + offset,
        })
        .collect();
    Ok((messages, joins))
}

fn user_id(index: usize) -> UserId {
    UserId::new(format!("{}", index + 1))
}

/// Mixture targeting: with probability `pref_strength` the partner is
/// drawn proportionally to (degree + 1) over users joined by `at`,
/// uniformly otherwise. Returns `None` when nobody else has joined.
fn pick_target(
    sender: usize,
    at: i64,
    join_offsets: &[i64],
    degree: &[usize],
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let eligible: Vec<usize> = (0..join_offsets.len())
        .filter(|&u| u != sender && join_offsets[u] <= at)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    if rng.gen::<f64>() < config.pref_strength {
        let total: usize = eligible.iter().map(|&u| degree[u] + 1).sum();
        let mut roll = rng.gen_range(0..total);
        for &u in &eligible {
            let weight = degree[u] + 1;
            if roll < weight {
                return Some(u);
            }
            roll -= weight;
        }
        unreachable!("weights cover the roll range");
    } else {
        Some(eligible[rng.gen_range(0..eligible.len())])
    }
}

/// Render messages in the ingest module's file format.
pub fn messages_file(messages: &[Message]) -> String {
    let mut out = String::new();
    for message in messages {
        out.push_str(&format!(
            "{} {} {}\n",
            message.sender, message.receiver, message.timestamp
        ));
    }
    out
}

/// Render join records in the ingest module's side-file format.
pub fn joins_file(joins: &[JoinRecord]) -> String {
    let mut out = String::new();
    for record in joins {
        out.push_str(&format!("{} {}\n", record.user, record.timestamp));
    }
    out
}
