//! Logical clock, message queue and the adversary's channel operations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::primitives::BitString;
use crate::wire::{
    Msg1, Msg2, Msg3, ReplacementRequest, ReplacementResponse, Timestamp, UavRegistrationRequest,
    UavRegistrationResponse, UavResponseSubmission, UserRegistrationRequest,
    UserRegistrationResponse, WireMessage,
};

/// Shared logical clock. Never moves backwards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    now: u32,
}

impl SimClock {
    pub fn starting_at(now: u32) -> SimClock {
        SimClock { now }
    }

    pub fn now(&self) -> Timestamp {
        Timestamp(self.now)
    }

    pub fn advance(&mut self, ticks: u32) {
        self.now = self.now.saturating_add(ticks);
    }

    fn advance_to(&mut self, t: u32) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    User(String),
    Gateway,
    Uav(String),
    Adversary,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::User(n) => write!(f, "user:{n}"),
            Endpoint::Gateway => f.write_str("gwn"),
            Endpoint::Uav(n) => write!(f, "uav:{n}"),
            Endpoint::Adversary => f.write_str("adversary"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Msg1,
    Msg2,
    Msg3,
    UserRegistrationRequest,
    UserRegistrationResponse,
    UavRegistrationRequest,
    UavRegistrationResponse,
    UavResponseSubmission,
    ReplacementRequest,
    ReplacementResponse,
    Broadcast,
}

const BROADCAST_LAYOUT: &[(&str, usize)] = &[("ID_j", 160)];

impl MessageKind {
    pub fn layout(self) -> &'static [(&'static str, usize)] {
        match self {
            MessageKind::Msg1 => Msg1::LAYOUT,
            MessageKind::Msg2 => Msg2::LAYOUT,
            MessageKind::Msg3 => Msg3::LAYOUT,
            MessageKind::UserRegistrationRequest => UserRegistrationRequest::LAYOUT,
            MessageKind::UserRegistrationResponse => UserRegistrationResponse::LAYOUT,
            MessageKind::UavRegistrationRequest => UavRegistrationRequest::LAYOUT,
            MessageKind::UavRegistrationResponse => UavRegistrationResponse::LAYOUT,
            MessageKind::UavResponseSubmission => UavResponseSubmission::LAYOUT,
            MessageKind::ReplacementRequest => ReplacementRequest::LAYOUT,
            MessageKind::ReplacementResponse => ReplacementResponse::LAYOUT,
            MessageKind::Broadcast => BROADCAST_LAYOUT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Msg1 => "msg1",
            MessageKind::Msg2 => "msg2",
            MessageKind::Msg3 => "msg3",
            MessageKind::UserRegistrationRequest => "user_registration_request",
            MessageKind::UserRegistrationResponse => "user_registration_response",
            MessageKind::UavRegistrationRequest => "uav_registration_request",
            MessageKind::UavRegistrationResponse => "uav_registration_response",
            MessageKind::UavResponseSubmission => "uav_response_submission",
            MessageKind::ReplacementRequest => "replacement_request",
            MessageKind::ReplacementResponse => "replacement_response",
            MessageKind::Broadcast => "broadcast",
        }
    }

    /// Bit range of a named field.
    pub fn field_range(self, field: &str) -> Option<(usize, usize)> {
        let mut offset = 0;
        for (name, width) in self.layout() {
            if *name == field {
                return Some((offset, *width));
            }
            offset += width;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub id: u64,
    /// Routing tag tying a message to an AKA run; copied by replays.
    pub session: u64,
    pub origin: Endpoint,
    pub dest: Endpoint,
    pub kind: MessageKind,
    pub payload: BitString,
    pub secure: bool,
    pub deliver_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    FlipBit(usize),
    Substitute { field: String, value: BitString },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("no in-flight message {0}")]
    UnknownMessage(u64),
    #[error("no recorded message {0}")]
    NotRecorded(u64),
    #[error("secure-channel messages cannot be modified")]
    SecureChannel,
    #[error("{kind} has no field {field}")]
    UnknownField { kind: &'static str, field: String },
    #[error("bit {index} outside a {width}-bit payload")]
    BitOutOfRange { index: usize, width: usize },
    #[error("substitute for {field} must be {expected} bits, got {found}")]
    SubstituteWidth {
        field: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Send,
    Deliver,
    Drop,
    Delay { ticks: u32 },
    Replay { of: u64 },
    Tamper(Tamper),
    Inject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub tick: u32,
    pub action: Action,
    pub id: u64,
    pub session: u64,
    pub origin: Endpoint,
    pub dest: Endpoint,
    pub kind: MessageKind,
    pub secure: bool,
    pub payload: BitString,
}

#[derive(Debug, Clone, Default)]
pub struct Network {
    clock: SimClock,
    queue: Vec<Envelope>,
    next_id: u64,
    recorded: Vec<Envelope>,
    log: Vec<LogEntry>,
    logging: bool,
    insider: bool,
}

impl Network {
    pub fn new(clock: SimClock) -> Network {
        Network {
            clock,
            logging: true,
            ..Network::default()
        }
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn advance(&mut self, ticks: u32) {
        self.clock.advance(ticks);
    }

    /// Allows tampering with secure-channel messages.
    pub fn set_insider(&mut self, on: bool) {
        self.insider = on;
    }

    /// Turns per-message logging on or off; floods run with it off.
    pub fn set_logging(&mut self, on: bool) {
        self.logging = on;
    }

    fn record(&mut self, action: Action, env: &Envelope) {
        if self.logging {
            self.log.push(LogEntry {
                tick: self.clock.now().0,
                action,
                id: env.id,
                session: env.session,
                origin: env.origin.clone(),
                dest: env.dest.clone(),
                kind: env.kind,
                secure: env.secure,
                payload: env.payload.clone(),
            });
        }
    }

    fn enqueue(&mut self, mut env: Envelope, action: Action) -> u64 {
        env.id = self.next_id;
        self.next_id += 1;
        self.record(action, &env);
        self.recorded.push(env.clone());
        self.queue.push(env);
        self.next_id - 1
    }

    /// Queues an honest message for delivery at the current tick.
    pub fn send(
        &mut self,
        origin: Endpoint,
        dest: Endpoint,
        kind: MessageKind,
        payload: BitString,
        secure: bool,
        session: u64,
    ) -> u64 {
        let env = Envelope {
            id: 0,
            session,
            origin,
            dest,
            kind,
            payload,
            secure,
            deliver_at: self.now(),
        };
        self.enqueue(env, Action::Send)
    }

    /// Synchronous hand-over used by the registration phases.
    pub fn transfer(
        &mut self,
        origin: Endpoint,
        dest: Endpoint,
        kind: MessageKind,
        payload: BitString,
        secure: bool,
    ) {
        let env = Envelope {
            id: self.next_id,
            session: 0,
            origin,
            dest,
            kind,
            payload,
            secure,
            deliver_at: self.now(),
        };
        self.next_id += 1;
        self.record(Action::Send, &env);
        self.record(Action::Deliver, &env);
        self.recorded.push(env);
    }

    /// Adversary-originated public message.
    pub fn inject(
        &mut self,
        dest: Endpoint,
        kind: MessageKind,
        payload: BitString,
        session: u64,
    ) -> u64 {
        let env = Envelope {
            id: 0,
            session,
            origin: Endpoint::Adversary,
            dest,
            kind,
            payload,
            secure: false,
            deliver_at: self.now(),
        };
        self.enqueue(env, Action::Inject)
    }

    pub fn in_flight(&self) -> &[Envelope] {
        &self.queue
    }

    /// Every message ever sent, in order.
    pub fn recorded(&self) -> &[Envelope] {
        &self.recorded
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    fn position(&self, id: u64) -> Result<usize, NetError> {
        self.queue
            .iter()
            .position(|e| e.id == id)
            .ok_or(NetError::UnknownMessage(id))
    }

    pub fn drop_message(&mut self, id: u64) -> Result<Envelope, NetError> {
        let pos = self.position(id)?;
        let env = self.queue.remove(pos);
        self.record(Action::Drop, &env);
        Ok(env)
    }

    pub fn delay(&mut self, id: u64, ticks: u32) -> Result<(), NetError> {
        let pos = self.position(id)?;
        self.queue[pos].deliver_at = Timestamp(self.queue[pos].deliver_at.0.saturating_add(ticks));
        let env = self.queue[pos].clone();
        self.record(Action::Delay { ticks }, &env);
        Ok(())
    }

    pub fn tamper(&mut self, id: u64, tamper: Tamper) -> Result<(), NetError> {
        let pos = self.position(id)?;
        let env = &self.queue[pos];
        if env.secure && !self.insider {
            return Err(NetError::SecureChannel);
        }
        let mut payload = env.payload.clone();
        match &tamper {
            Tamper::FlipBit(i) => {
                if *i >= payload.width() {
                    return Err(NetError::BitOutOfRange {
                        index: *i,
                        width: payload.width(),
                    });
                }
                payload.flip(*i);
            }
            Tamper::Substitute { field, value } => {
                let (start, width) =
                    env.kind
                        .field_range(field)
                        .ok_or_else(|| NetError::UnknownField {
                            kind: env.kind.name(),
                            field: field.clone(),
                        })?;
                if value.width() != width {
                    return Err(NetError::SubstituteWidth {
                        field: field.clone(),
                        expected: width,
                        found: value.width(),
                    });
                }
                for k in 0..width {
                    payload.set(start + k, value.get(k));
                }
            }
        }
        self.queue[pos].payload = payload;
        let env = self.queue[pos].clone();
        self.record(Action::Tamper(tamper), &env);
        Ok(())
    }

    /// Re-sends a copy of a recorded public message, to be delivered now.
    pub fn replay(&mut self, recorded_id: u64) -> Result<u64, NetError> {
        let original = self
            .recorded
            .iter()
            .find(|e| e.id == recorded_id)
            .cloned()
            .ok_or(NetError::NotRecorded(recorded_id))?;
        if original.secure && !self.insider {
            return Err(NetError::SecureChannel);
        }
        let env = Envelope {
            deliver_at: self.now(),
            ..original
        };
        Ok(self.enqueue(env, Action::Replay { of: recorded_id }))
    }

    /// Replays a recorded message under another session tag.
    pub fn replay_into(&mut self, recorded_id: u64, session: u64) -> Result<u64, NetError> {
        let id = self.replay(recorded_id)?;
        let pos = self.position(id)?;
        self.queue[pos].session = session;
        Ok(id)
    }

    /// Pops the next message due, advancing the clock to its delivery tick.
    pub fn next_ready(&mut self) -> Option<Envelope> {
        let pos = self
            .queue
            .iter()
            .enumerate()
            .min_by_key(|(_, e)| (e.deliver_at.0, e.id))
            .map(|(i, _)| i)?;
        let env = self.queue.remove(pos);
        self.clock.advance_to(env.deliver_at.0);
        self.record(Action::Deliver, &env);
        Some(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net_with(kind: MessageKind, width: usize, secure: bool) -> (Network, u64) {
        let mut n = Network::new(SimClock::starting_at(10));
        let id = n.send(
            Endpoint::User("a".into()),
            Endpoint::Gateway,
            kind,
            BitString::zeros(width),
            secure,
            1,
        );
        (n, id)
    }

    #[test]
    fn delay_advances_clock_on_delivery() {
        let (mut n, id) = net_with(MessageKind::Msg1, 672, false);
        n.delay(id, 2).unwrap();
        let env = n.next_ready().unwrap();
        assert_eq!(env.deliver_at, Timestamp(12));
        assert_eq!(n.now(), Timestamp(12));
        assert!(n.next_ready().is_none());
    }

    #[test]
    fn tamper_flip_and_substitute() {
        let (mut n, id) = net_with(MessageKind::Msg3, 512, false);
        n.tamper(id, Tamper::FlipBit(0)).unwrap();
        n.tamper(
            id,
            Tamper::Substitute {
                field: "TS_3".into(),
                value: BitString::from_u32(7),
            },
        )
        .unwrap();
        let env = n.next_ready().unwrap();
        assert!(env.payload.get(0));
        assert_eq!(env.payload.slice(320, 32), BitString::from_u32(7));
        let log: Vec<_> = n.log().iter().map(|e| &e.action).collect();
        assert!(matches!(log[1], Action::Tamper(Tamper::FlipBit(0))));
    }

    #[test]
    fn secure_channel_is_off_limits_outside_insider_mode() {
        let (mut n, id) = net_with(MessageKind::UserRegistrationRequest, 320, true);
        assert_eq!(
            n.tamper(id, Tamper::FlipBit(3)),
            Err(NetError::SecureChannel)
        );
        assert_eq!(n.replay(id), Err(NetError::SecureChannel));
        n.set_insider(true);
        assert!(n.tamper(id, Tamper::FlipBit(3)).is_ok());
    }

    #[test]
    fn bad_tamper_requests_are_rejected() {
        let (mut n, id) = net_with(MessageKind::Msg1, 672, false);
        assert!(matches!(
            n.tamper(id, Tamper::FlipBit(672)),
            Err(NetError::BitOutOfRange { .. })
        ));
        assert!(matches!(
            n.tamper(
                id,
                Tamper::Substitute {
                    field: "v9".into(),
                    value: BitString::zeros(160)
                }
            ),
            Err(NetError::UnknownField { .. })
        ));
        assert_eq!(n.drop_message(99), Err(NetError::UnknownMessage(99)));
    }

    #[test]
    fn replay_keeps_session_and_logs_origin() {
        let (mut n, id) = net_with(MessageKind::Msg1, 672, false);
        n.next_ready().unwrap();
        n.advance(1);
        let r = n.replay(id).unwrap();
        let env = n.next_ready().unwrap();
        assert_eq!(env.id, r);
        assert_eq!(env.session, 1);
        assert_eq!(env.deliver_at, Timestamp(11));
    }

    #[test]
    fn field_ranges_follow_layout() {
        assert_eq!(MessageKind::Msg1.field_range("TS_1"), Some((640, 32)));
        assert_eq!(MessageKind::Msg2.field_range("MAC_2"), Some((0, 160)));
        assert_eq!(MessageKind::Msg3.field_range("V_2"), Some((352, 160)));
    }
}
