use std::fs::File;
use std::io::BufWriter;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::thread::sleep;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use qrir::config::Config;
use qrir::experiment::party_seeds;
use qrir::metrics::FrameCsv;
use qrir::session::{drive, Alice, Bob, FrameRecord};
use qrir::simchannel::{simulate_block, QberProfile};
use qrir::transport::TcpLink;

use crate::{load_pool, Role};

const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);

fn open_link(config: &Config, listen: bool) -> Result<TcpLink> {
    let addr = (config.net.host.as_str(), config.net.port);
    let stream = if listen {
        let listener = TcpListener::bind(addr).with_context(|| format!("binding {}:{}", addr.0, addr.1))?;
        eprintln!("listening on {}", listener.local_addr()?);
        listener.accept()?.0
    } else {
        let start = Instant::now();
        loop {
            match TcpStream::connect(addr) {
                Ok(s) => break s,
                Err(e) if start.elapsed() < CONNECT_TIMEOUT => {
                    let _ = e;
                    sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(e).with_context(|| format!("connecting to {}:{}", addr.0, addr.1)),
            }
        }
    };
    Ok(TcpLink::new(stream)?)
}

/// Runs `run.frames_per_point` frames of the first configured scheme as
/// one party. Both processes simulate the same key pair from `run.seed`
/// and each keeps only its own half.
pub fn session(config: &Config, role: Role, qber: f64, listen: bool, out: &Path) -> Result<()> {
    let pool = load_pool(config)?;
    let scheme = *config.run.schemes.first().context("no scheme configured")?;
    let session = config.session(scheme, config.run.seed);
    let (alice_seed, bob_seed) = party_seeds(session.seed);
    let profile = QberProfile::constant(qber);
    let mut link = open_link(config, listen)?;
    let mut csv = FrameCsv::new(BufWriter::new(
        File::create(out).with_context(|| format!("creating {}", out.display()))?,
    ));

    let total = config.run.frames_per_point;
    let per_block = config.run.frames_per_block;
    let blocks = total.div_ceil(per_block);
    let block_input = |b: usize| {
        let frames = per_block.min(total - b * per_block);
        simulate_block(&config.channel, &profile, &session.geometry, b, frames, config.run.seed)
    };

    let (result, records): (Result<()>, Vec<FrameRecord>) = match role {
        Role::Alice => {
            let mut alice = Alice::new(&pool, session.clone(), alice_seed)?;
            let result = (0..blocks).try_for_each(|b| {
                let initial = alice.start_block(block_input(b).alice)?;
                drive(&mut alice, &mut link, initial)
            });
            (result.map_err(Into::into), alice.records().to_vec())
        }
        Role::Bob => {
            let mut bob = Bob::new(&pool, session.clone(), bob_seed)?;
            let result = (0..blocks).try_for_each(|b| {
                let initial = bob.start_block(block_input(b).bob)?;
                drive(&mut bob, &mut link, initial)
            });
            (result.map_err(Into::into), bob.records().to_vec())
        }
    };
    for r in &records {
        csv.write(r)?;
    }
    csv.flush()?;
    let verified = records.iter().filter(|r| r.verified).count();
    eprintln!("{} frames finished, {verified} verified", records.len());
    result.context("session aborted")
}
