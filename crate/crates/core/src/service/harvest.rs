//! Pulls a peer registry's hosted schemes into local sequenced copies using
//! the peer's own read API.

use reqwest::{Client, StatusCode};

use crate::engine::{apply_to_state, ChangeEvent};
use crate::error::{RegistryError, Result};
use crate::kos;
use crate::registry::{HarvestReport, HarvestedScheme, Registry, SchemeKind, SchemeSummary};
use crate::wire;

use super::VERSION_HEADER;

async fn fetch(client: &Client, url: &str) -> Result<(String, Option<u64>)> {
    let resp = client.get(url).send().await.map_err(|e| RegistryError::PeerUnreachable(format!("{url}: {e}")))?;
    if resp.status() != StatusCode::OK {
        return Err(RegistryError::ProtocolError(format!("{url}: status {}", resp.status())));
    }
    let version = resp
        .headers()
        .get(VERSION_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let body = resp.text().await.map_err(|e| RegistryError::ProtocolError(format!("{url}: {e}")))?;
    Ok((body, version))
}

fn protocol(e: RegistryError) -> RegistryError {
    match e {
        RegistryError::ProtocolError(_) | RegistryError::PeerUnreachable(_) => e,
        other => RegistryError::ProtocolError(other.to_string()),
    }
}

/// Fetches everything that changed on `peer` since the last harvest and
/// stores it in one step. Nothing is stored if any request fails.
pub async fn harvest(reg: &Registry, client: &Client, peer: &str) -> Result<HarvestReport> {
    let peer = peer.trim_end_matches('/');
    let (listing, _) = fetch(client, &format!("{peer}/schemes")).await?;
    let summaries: Vec<SchemeSummary> = wire::from_lines(&listing).map_err(protocol)?;
    let baseline = reg.harvest_baseline(peer);
    let mut fetched = Vec::new();
    for s in summaries.into_iter().filter(|s| s.kind == SchemeKind::Hosted) {
        let known = baseline
            .get(&s.token)
            .filter(|c| c.scheme_uri == s.uri)
            .and_then(|c| Some((c, c.source_version?)));
        let scheme = match known {
            Some((_, v)) if v == s.version => continue,
            Some((copy, since)) => {
                let url = format!("{peer}/schemes/{}/changes?since={since}", s.token);
                let (body, _) = fetch(client, &url).await?;
                let events: Vec<ChangeEvent> = wire::from_lines(&body).map_err(protocol)?;
                let mut state = copy.state.clone();
                let mut version = since;
                for ev in &events {
                    if ev.scheme != s.token || ev.version <= since || ev.version < version {
                        return Err(RegistryError::ProtocolError(format!("{url}: out-of-order event {}", ev.version)));
                    }
                    apply_to_state(&mut state, ev).map_err(protocol)?;
                    version = ev.version;
                }
                HarvestedScheme { source_token: s.token.clone(), source_version: version, state }
            }
            None => {
                let url = format!("{peer}/schemes/{}?format=triples", s.token);
                let (body, version) = fetch(client, &url).await?;
                let version = version.ok_or_else(|| RegistryError::ProtocolError(format!("{url}: no {VERSION_HEADER} header")))?;
                let (triples, problems) = kos::parse_ntriples(body.as_bytes());
                if let Some(p) = problems.first() {
                    return Err(RegistryError::ProtocolError(format!("{url}: line {}: {}", p.line, p.message)));
                }
                let (draft, _) = kos::triples_to_scheme(&triples, reg.vocabulary()).map_err(protocol)?;
                HarvestedScheme { source_token: s.token.clone(), source_version: version, state: draft.state }
            }
        };
        fetched.push(scheme);
    }
    reg.apply_harvest(peer, fetched)
}
