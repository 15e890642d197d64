//! Message-log parsing and the validated, week-indexed event store.
//!
//! Input is the whitespace-triple log format (`sender receiver
//! unix_timestamp`, one message per line) plus an optional `user
//! unix_timestamp` join-time side file. Users without an explicit join
//! record are assumed to join at their first recorded activity.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, UserId};

/// Fixed week length: seven days, anchored at the store origin.
pub const WEEK_SECONDS: i64 = 604_800;

/// Default number of weeks retained for analysis.
pub const DEFAULT_HORIZON_WEEKS: u32 = 20;

/// One directed message between two users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: UserId,
    pub receiver: UserId,
    pub timestamp: i64,
}

impl Message {
    pub fn new(sender: impl Into<UserId>, receiver: impl Into<UserId>, timestamp: i64) -> Self {
        Message {
            sender: sender.into(),
            receiver: receiver.into(),
            timestamp,
        }
    }

    /// Sender and receiver coincide. Self-messages still produce
    /// send/receive events but never form ties or count as new contacts.
    pub fn is_self_message(&self) -> bool {
        self.sender == self.receiver
    }
}

/// Explicit join time for one user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRecord {
    pub user: UserId,
    pub timestamp: i64,
}

/// Kind of an attributed event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Join,
    Send,
    Recv,
}

impl EventKind {
    /// Order of simultaneous events: join, then send, then receive.
    fn rank(self) -> u8 {
        match self {
            EventKind::Join => 0,
            EventKind::Send => 1,
            EventKind::Recv => 2,
        }
    }
}

/// One timestamped occurrence attributed to a user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub user: UserId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterpart: Option<UserId>,
    pub timestamp: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreHeader {
    t0: i64,
    week_length: i64,
    horizon_weeks: u32,
}

/// Immutable, time-ordered event store over one message log.
///
/// Events are held in a canonical order: timestamp, then
/// join-before-send-before-receive, then stable input order. Events
/// past the horizon boundary are retained but excluded from every
/// downstream computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStore {
    events: Vec<Event>,
    t0: i64,
    week_length: i64,
    horizon_weeks: u32,
    join_times: BTreeMap<UserId, i64>,
    user_events: BTreeMap<UserId, Vec<usize>>,
}

/// Parse a message log: one `sender receiver timestamp` triple per
/// non-empty line. Messages come back in input order.
pub fn parse_messages<R: BufRead>(reader: R) -> Result<Vec<Message>> {
    let mut messages = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!(
                    "expected `sender receiver timestamp`, found {} fields",
                    fields.len()
                ),
            });
        }
        let timestamp = parse_timestamp(fields[2], idx + 1)?;
        messages.push(Message::new(fields[0], fields[1], timestamp));
    }
    Ok(messages)
}

/// Parse the optional join-time side file: one `user timestamp` pair
/// per non-empty line. At most one record per user.
pub fn parse_joins<R: BufRead>(reader: R) -> Result<Vec<JoinRecord>> {
    let mut joins = Vec::new();
    let mut seen: BTreeMap<UserId, ()> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `user timestamp`, found {} fields", fields.len()),
            });
        }
        let user = UserId::new(fields[0]);
        if seen.insert(user.clone(), ()).is_some() {
            return Err(Error::DuplicateJoin { user });
        }
        let timestamp = parse_timestamp(fields[1], idx + 1)?;
        joins.push(JoinRecord { user, timestamp });
    }
    Ok(joins)
}

fn parse_timestamp(field: &str, line: usize) -> Result<i64> {
    let timestamp: i64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid timestamp `{field}`"),
    })?;
    if timestamp < 0 {
        return Err(Error::Parse {
            line,
            message: format!("negative timestamp `{field}`"),
        });
    }
    Ok(timestamp)
}

/// Build the event store from parsed messages and optional joins.
///
/// Every message yields one send event and one receive event. Users
/// lacking an explicit join record join at their first message
/// timestamp. A join record later than the user's first message is a
/// validation error listing every offending user.
pub fn build_store(
    messages: &[Message],
    joins: Option<&[JoinRecord]>,
    horizon_weeks: u32,
) -> Result<EventStore> {
    if messages.is_empty() {
        return Err(Error::EmptyInput);
    }
    if horizon_weeks == 0 {
        return Err(Error::InvalidConfig {
            message: "horizon_weeks must be positive".into(),
        });
    }

    let mut first_activity: BTreeMap<UserId, i64> = BTreeMap::new();
    for message in messages {
        for user in [&message.sender, &message.receiver] {
            first_activity
                .entry(user.clone())
                .and_modify(|t| *t = (*t).min(message.timestamp))
                .or_insert(message.timestamp);
        }
    }

    let mut join_times: BTreeMap<UserId, i64> = first_activity;
    if let Some(joins) = joins {
        let mut offending = Vec::new();
        let mut seen: BTreeMap<UserId, ()> = BTreeMap::new();
        for record in joins {
            if seen.insert(record.user.clone(), ()).is_some() {
                return Err(Error::DuplicateJoin {
                    user: record.user.clone(),
                });
            }
            match join_times.get_mut(&record.user) {
                Some(first) => {
                    if record.timestamp > *first {
                        offending.push(record.user.clone());
                    } else {
                        *first = record.timestamp;
                    }
                }
                // Join-only users carry a bare `J` history.
                None => {
                    join_times.insert(record.user.clone(), record.timestamp);
                }
            }
        }
        if !offending.is_empty() {
            offending.sort();
            return Err(Error::JoinAfterFirstMessage { users: offending });
        }
    }

    let mut events = Vec::with_capacity(join_times.len() + 2 * messages.len());
    for (user, &timestamp) in &join_times {
        events.push(Event {
            kind: EventKind::Join,
            user: user.clone(),
            counterpart: None,
            timestamp,
        });
    }
    for message in messages {
        events.push(Event {
            kind: EventKind::Send,
            user: message.sender.clone(),
            counterpart: Some(message.receiver.clone()),
            timestamp: message.timestamp,
        });
        events.push(Event {
            kind: EventKind::Recv,
            user: message.receiver.clone(),
            counterpart: Some(message.sender.clone()),
            timestamp: message.timestamp,
        });
    }
    // Stable sort keeps input order within equal (timestamp, kind).
    events.sort_by_key(|e| (e.timestamp, e.kind.rank()));

    let t0 = events.first().map(|e| e.timestamp).unwrap_or(0);
    Ok(EventStore::from_parts(events, t0, horizon_weeks, join_times))
}

impl EventStore {
    fn from_parts(
        events: Vec<Event>,
        t0: i64,
        horizon_weeks: u32,
        join_times: BTreeMap<UserId, i64>,
    ) -> Self {
        let mut user_events: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
        for (idx, event) in events.iter().enumerate() {
            user_events.entry(event.user.clone()).or_default().push(idx);
        }
        EventStore {
            events,
            t0,
            week_length: WEEK_SECONDS,
            horizon_weeks,
            join_times,
            user_events,
        }
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn week_length(&self) -> i64 {
        self.week_length
    }

    pub fn horizon_weeks(&self) -> u32 {
        self.horizon_weeks
    }

    /// All events in canonical order, including beyond-horizon ones.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// 1-based week index of a timestamp relative to the store origin.
    pub fn week_of(&self, timestamp: i64) -> Result<u32> {
        if timestamp < self.t0 {
            return Err(Error::BeforeOrigin {
                timestamp,
                t0: self.t0,
            });
        }
        Ok(((timestamp - self.t0) / self.week_length) as u32 + 1)
    }

    /// Exclusive upper timestamp bound of the given 1-based week.
    pub fn end_of_week(&self, week: u32) -> i64 {
        self.t0 + i64::from(week) * self.week_length
    }

    pub fn is_beyond_horizon(&self, timestamp: i64) -> bool {
        timestamp >= self.end_of_week(self.horizon_weeks)
    }

    /// Events inside the analysis horizon, canonical order.
    pub fn events_within_horizon(&self) -> impl Iterator<Item = &Event> {
        let bound = self.end_of_week(self.horizon_weeks);
        self.events.iter().filter(move |e| e.timestamp < bound)
    }

    /// Messages inside the horizon (reconstructed from send events),
    /// time-ordered with stable input order on ties.
    pub fn messages_within_horizon(&self) -> impl Iterator<Item = Message> + '_ {
        let bound = self.end_of_week(self.horizon_weeks);
        self.events.iter().filter_map(move |e| {
            if e.kind == EventKind::Send && e.timestamp < bound {
                Some(Message {
                    sender: e.user.clone(),
                    receiver: e.counterpart.clone().expect("send event has a counterpart"),
                    timestamp: e.timestamp,
                })
            } else {
                None
            }
        })
    }

    /// Users known to the store, ascending id order.
    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.join_times.keys()
    }

    pub fn user_count(&self) -> usize {
        self.join_times.len()
    }

    pub fn join_time(&self, user: &UserId) -> Option<i64> {
        self.join_times.get(user).copied()
    }

    /// 1-based week the user joined in.
    pub fn join_week(&self, user: &UserId) -> Option<u32> {
        self.join_time(user).map(|t| {
            self.week_of(t)
                .expect("join times never precede the origin")
        })
    }

    /// Indices into [`EventStore::events`] for one user, canonical order.
    pub(crate) fn user_event_indices(&self, user: &UserId) -> Option<&[usize]> {
        self.user_events.get(user).map(Vec::as_slice)
    }

    /// Serialize as newline-delimited JSON: a header record followed by
    /// one record per event in canonical order.
    pub fn write_ndjson<W: Write>(&self, mut writer: W) -> Result<()> {
        let header = StoreHeader {
            t0: self.t0,
            week_length: self.week_length,
            horizon_weeks: self.horizon_weeks,
        };
        serde_json::to_writer(&mut writer, &header)?;
        writer.write_all(b"\n")?;
        for event in &self.events {
            serde_json::to_writer(&mut writer, event)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Re-read a store serialized by [`EventStore::write_ndjson`].
    pub fn read_ndjson<R: BufRead>(reader: R) -> Result<EventStore> {
        let mut lines = reader.lines();
        let header_line = lines.next().ok_or(Error::EmptyInput)??;
        let header: StoreHeader = serde_json::from_str(&header_line)?;
        let mut events = Vec::new();
        let mut join_times = BTreeMap::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line)?;
            if event.kind == EventKind::Join {
                join_times.insert(event.user.clone(), event.timestamp);
            }
            events.push(event);
        }
        Ok(EventStore::from_parts(
            events,
            header.t0,
            header.horizon_weeks,
            join_times,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn store_of(lines: &str) -> EventStore {
        let messages = parse_messages(Cursor::new(lines)).unwrap();
        build_store(&messages, None, DEFAULT_HORIZON_WEEKS).unwrap()
    }

    #[test]
    fn parses_single_triple() {
        let messages = parse_messages(Cursor::new("1 2 1082040961\n")).unwrap();
        assert_eq!(messages, vec![Message::new("1", "2", 1082040961)]);
    }

    #[test]
    fn parse_error_names_line() {
        let err = parse_messages(Cursor::new("1 2 abc\n")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected: {other:?}"),
        }
        let err = parse_messages(Cursor::new("1 2 3\n\n1 2\n")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parse_count_matches_nonempty_lines() {
        let messages = parse_messages(Cursor::new("1 2 10\n\n2 1 11\n   \n3 1 12\n")).unwrap();
        assert_eq!(messages.len(), 3);
    }

    #[test]
    fn negative_timestamp_rejected() {
        assert!(parse_messages(Cursor::new("1 2 -5\n")).is_err());
    }

    #[test]
    fn single_message_infers_joins() {
        let store = store_of("7 9 1000\n");
        assert_eq!(store.t0(), 1000);
        let kinds: Vec<(EventKind, &str)> = store
            .events()
            .iter()
            .map(|e| (e.kind, e.user.as_str()))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (EventKind::Join, "7"),
                (EventKind::Join, "9"),
                (EventKind::Send, "7"),
                (EventKind::Recv, "9"),
            ]
        );
    }

    #[test]
    fn explicit_join_moves_origin() {
        let messages = parse_messages(Cursor::new("u v 1000\n")).unwrap();
        let joins = vec![JoinRecord {
            user: UserId::new("u"),
            timestamp: 995,
        }];
        let store = build_store(&messages, Some(&joins), 20).unwrap();
        assert_eq!(store.t0(), 995);
        assert_eq!(store.join_time(&UserId::new("u")), Some(995));
        assert_eq!(store.join_time(&UserId::new("v")), Some(1000));
    }

    #[test]
    fn late_join_record_rejected() {
        let messages = parse_messages(Cursor::new("u v 1000\n")).unwrap();
        let joins = vec![JoinRecord {
            user: UserId::new("u"),
            timestamp: 1001,
        }];
        let err = build_store(&messages, Some(&joins), 20).unwrap_err();
        match err {
            Error::JoinAfterFirstMessage { users } => {
                assert_eq!(users, vec![UserId::new("u")]);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn week_of_boundaries() {
        let store = store_of("1 2 5000\n");
        assert_eq!(store.week_of(5000).unwrap(), 1);
        assert_eq!(store.week_of(5000 + 604_799).unwrap(), 1);
        assert_eq!(store.week_of(5000 + 604_800).unwrap(), 2);
        assert!(store.week_of(4999).is_err());
    }

    #[test]
    fn join_precedes_other_events_per_user() {
        let store = store_of("3 1 50\n1 2 10\n2 3 10\n");
        for user in store.users() {
            let idxs = store.user_event_indices(user).unwrap();
            let first = &store.events()[idxs[0]];
            assert_eq!(first.kind, EventKind::Join);
            for &i in &idxs[1..] {
                let e = &store.events()[i];
                assert_ne!(e.kind, EventKind::Join);
                assert!(e.timestamp >= first.timestamp);
            }
        }
    }

    #[test]
    fn send_and_recv_counts_match_messages() {
        let store = store_of("1 2 10\n2 1 20\n1 3 30\n");
        let sends = store
            .events_within_horizon()
            .filter(|e| e.kind == EventKind::Send)
            .count();
        let recvs = store
            .events_within_horizon()
            .filter(|e| e.kind == EventKind::Recv)
            .count();
        assert_eq!(sends, 3);
        assert_eq!(recvs, 3);
    }

    #[test]
    fn beyond_horizon_events_retained_but_flagged() {
        // Second message lands in week 3, beyond a 2-week horizon.
        let late = 2 * WEEK_SECONDS + 5;
        let store_text = format!("1 2 0\n1 2 {late}\n");
        let messages = parse_messages(Cursor::new(store_text)).unwrap();
        let store = build_store(&messages, None, 2).unwrap();
        assert_eq!(store.events().len(), 6);
        assert_eq!(store.events_within_horizon().count(), 4);
        assert_eq!(store.messages_within_horizon().count(), 1);
        assert!(store.is_beyond_horizon(late));
    }

    #[test]
    fn ndjson_round_trip_is_identical() {
        let store = store_of("5 2 100\n2 5 180\n5 7 604900\n");
        let mut buf = Vec::new();
        store.write_ndjson(&mut buf).unwrap();
        let reread = EventStore::read_ndjson(Cursor::new(buf)).unwrap();
        assert_eq!(reread.events(), store.events());
        assert_eq!(reread.t0(), store.t0());
        assert_eq!(reread.horizon_weeks(), store.horizon_weeks());
    }

    #[test]
    fn empty_messages_rejected() {
        assert!(matches!(build_store(&[], None, 20), Err(Error::EmptyInput)));
    }
}
