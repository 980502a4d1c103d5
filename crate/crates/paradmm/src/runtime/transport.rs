use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::Message;
use crate::error::{Error, Result};

/// One side of a bidirectional link. Implementations may serialize; the
/// in-process one moves values.
pub trait Endpoint: Send {
    fn send(&self, msg: Message) -> Result<()>;
    /// Blocks until a message arrives, the peer hangs up or the timeout
    /// elapses.
    fn recv(&self) -> Result<Message>;
}

/// In-process endpoint over a pair of channels.
pub struct ChannelEndpoint {
    name: String,
    tx: Sender<Message>,
    rx: Receiver<Message>,
    timeout: Duration,
}

/// Two connected endpoints named for error messages.
pub fn channel_pair(a: &str, b: &str, timeout: Duration) -> (ChannelEndpoint, ChannelEndpoint) {
    let (tx_ab, rx_ab) = mpsc::channel();
    let (tx_ba, rx_ba) = mpsc::channel();
    (
        ChannelEndpoint {
            name: format!("{a}<-{b}"),
            tx: tx_ab,
            rx: rx_ba,
            timeout,
        },
        ChannelEndpoint {
            name: format!("{b}<-{a}"),
            tx: tx_ba,
            rx: rx_ab,
            timeout,
        },
    )
}

impl Endpoint for ChannelEndpoint {
    fn send(&self, msg: Message) -> Result<()> {
        self.tx
            .send(msg)
            .map_err(|e| Error::Shutdown(format!("{}: peer gone while sending {}", self.name, e.0.kind())))
    }

    fn recv(&self) -> Result<Message> {
        self.rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::Shutdown(format!("{}: timed out after {:?}", self.name, self.timeout)),
            RecvTimeoutError::Disconnected => Error::Shutdown(format!("{}: peer disconnected", self.name)),
        })
    }
}
