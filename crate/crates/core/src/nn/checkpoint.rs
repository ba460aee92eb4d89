use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::network::{Network, ParamBlock};
use super::NnError;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Network config, block table and flat weights. JSON floats are written
/// with shortest round-trip formatting, so save/load is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: NetworkConfig,
    pub blocks: Vec<ParamBlock>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: &Network, params: &[f64]) -> Result<Self, NnError> {
        if params.len() != net.param_count() {
            return Err(NnError::Shape { expected: net.param_count(), got: params.len() });
        }
        Ok(Self {
            version: CHECKPOINT_VERSION,
            config: net.config().clone(),
            blocks: net.blocks().to_vec(),
            params: params.to_vec(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    /// Load and check the block table against the stored config.
    pub fn load(path: &Path) -> Result<(Self, Network), NnError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ck: Checkpoint = serde_json::from_reader(file)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(NnError::Version(ck.version));
        }
        let net = Network::new(ck.config.clone())?;
        if net.blocks() != ck.blocks.as_slice() {
            return Err(NnError::InvalidConfig("block table does not match config".into()));
        }
        if ck.params.len() != net.param_count() {
            return Err(NnError::Shape { expected: net.param_count(), got: ck.params.len() });
        }
        Ok((ck, net))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Network::new(NetworkConfig::standard(8, 11, 11)).unwrap();
        let params = net.init_params(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        Checkpoint::new(&net, &params).unwrap().save(&path).unwrap();
        let (ck, loaded) = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.param_count(), net.param_count());
        assert!(ck.params.iter().zip(&params).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_other_versions() {
        let net = Network::new(NetworkConfig::standard(2, 3, 3)).unwrap();
        let mut ck = Checkpoint::new(&net, &vec![0.0; net.param_count()]).unwrap();
        ck.version = 99;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(NnError::Version(99))));
    }
}
