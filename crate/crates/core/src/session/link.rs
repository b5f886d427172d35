use std::sync::mpsc::{channel, Receiver, Sender};

use super::{Party, RoundMessage};
use crate::{Error, Result};

/// Duplex message link between the two parties.
pub trait Link {
    fn send(&mut self, msg: &RoundMessage) -> Result<()>;
    fn recv(&mut self) -> Result<RoundMessage>;
}

/// In-memory duplex queue.
#[derive(Debug)]
pub struct MemoryLink {
    tx: Sender<RoundMessage>,
    rx: Receiver<RoundMessage>,
}

impl MemoryLink {
    pub fn pair() -> (MemoryLink, MemoryLink) {
        let (a_tx, b_rx) = channel();
        let (b_tx, a_rx) = channel();
        (MemoryLink { tx: a_tx, rx: a_rx }, MemoryLink { tx: b_tx, rx: b_rx })
    }
}

impl Link for MemoryLink {
    fn send(&mut self, msg: &RoundMessage) -> Result<()> {
        self.tx.send(msg.clone()).map_err(|_| Error::Closed)
    }

    fn recv(&mut self) -> Result<RoundMessage> {
        self.rx.recv().map_err(|_| Error::Closed)
    }
}

/// Sends `initial`, then answers incoming messages until the party's block
/// is finished.
pub fn drive<P: Party + ?Sized, L: Link + ?Sized>(party: &mut P, link: &mut L, initial: Vec<RoundMessage>) -> Result<()> {
    for m in &initial {
        link.send(m)?;
    }
    while !party.block_finished() {
        let msg = link.recv()?;
        for reply in party.handle(msg)? {
            link.send(&reply)?;
        }
    }
    Ok(())
}
