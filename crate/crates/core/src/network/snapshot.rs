use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

use super::Network;

pub const SNAPSHOT_FORMAT: &str = "rffnet-model/1";

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format: &'a str,
    network: &'a Network,
}

#[derive(Deserialize)]
struct Snapshot {
    format: String,
    network: Network,
}

impl Network {
    /// JSON snapshot; every `f64` survives a round trip bit-for-bit.
    pub fn to_snapshot(&self) -> Result<String> {
        let snap = SnapshotRef {
            format: SNAPSHOT_FORMAT,
            network: self,
        };
        serde_json::to_string_pretty(&snap)
            .map_err(|e| Error::Data(format!("cannot serialize network: {e}")))
    }

    pub fn from_snapshot(text: &str) -> Result<Network> {
        let snap: Snapshot = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("malformed model snapshot: {e}")))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::Data(format!(
                "unsupported snapshot format '{}', expected '{SNAPSHOT_FORMAT}'",
                snap.format
            )));
        }
        snap.network.validate()?;
        if !snap.network.is_finite() {
            return Err(Error::Numeric(
                "snapshot contains non-finite parameters".into(),
            ));
        }
        Ok(snap.network)
    }
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    if !net.is_finite() {
        return Err(Error::Numeric(
            "refusing to save a network with NaN/Inf parameters".into(),
        ));
    }
    write_atomic(path, net.to_snapshot()?.as_bytes())
}

pub fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Network::from_snapshot(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ArchSpec, LossKind};
    use crate::numerics::Rng;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn snapshot_round_trip_is_bit_exact(seed in any::<u64>(), bn in any::<bool>(), d in 1usize..6) {
            let spec = ArchSpec::new(3, 3, vec![d, d + 1], LossKind::CrossEntropy).with_batchnorm(bn);
            let mut net = Network::build(&spec, &mut Rng::new(seed)).unwrap();
            // make values awkward to print
            for block in net.params_mut() {
                for v in block.iter_mut() {
                    *v = *v * std::f64::consts::PI / 7.0 + 1e-300;
                }
            }
            let back = Network::from_snapshot(&net.to_snapshot().unwrap()).unwrap();
            let a: Vec<u64> = net.params().concat().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.params().concat().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(net, back);
        }
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let net = Network::build(
            &ArchSpec::new(2, 2, vec![2], LossKind::Squared),
            &mut Rng::new(1),
        )
        .unwrap();
        let text = net
            .to_snapshot()
            .unwrap()
            .replace(SNAPSHOT_FORMAT, "other/9");
        assert!(Network::from_snapshot(&text).is_err());
    }

    #[test]
    fn refuses_to_save_nan() {
        let mut net = Network::build(
            &ArchSpec::new(2, 2, vec![2], LossKind::Squared),
            &mut Rng::new(1),
        )
        .unwrap();
        net.params_mut()[0][0] = f64::NAN;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        assert!(matches!(save_network(&net, &path), Err(Error::Numeric(_))));
        assert!(!path.exists());
    }
}
