//! JSON text frames exchanged with a live client.
//!
//! Client to server:
//! `{"type":"activation","t":ms,"biceps":x,"triceps":x,"trapezius":x,"pectoralis":x}`,
//! `{"type":"scenario","name":"sponge"|"egg"|"rigid_block"|"free"}`,
//! `{"type":"reset"}`.
//!
//! Server to client: `{"type":"state",...telemetry...}` and
//! `{"type":"error","msg":...}`.

use serde::{Deserialize, Serialize};

use prosim_core::plant::ObjectKind;
use prosim_core::session::ActivationCommand;
use prosim_core::Telemetry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Activation(ActivationCommand),
    Scenario { name: String },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(Telemetry),
    Error { msg: String },
}

/// What the simulation loop acts on.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Activation(ActivationCommand),
    Scenario(ObjectKind),
    Reset,
    Rejected(String),
}

pub fn parse_client(text: &str) -> Inbound {
    match serde_json::from_str::<ClientMessage>(text) {
        Ok(ClientMessage::Activation(a)) => Inbound::Activation(a),
        Ok(ClientMessage::Scenario { name }) => match name.parse() {
            Ok(kind) => Inbound::Scenario(kind),
            Err(e) => Inbound::Rejected(e.to_string()),
        },
        Ok(ClientMessage::Reset) => Inbound::Reset,
        Err(e) => Inbound::Rejected(format!("malformed frame: {e}")),
    }
}

pub fn encode(msg: &ServerMessage) -> String {
    serde_json::to_string(msg).expect("server messages always serialize")
}
