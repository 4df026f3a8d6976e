//! On-disk deployment state.
//!
//! ```text
//! <state-dir>/deployment.json        seed, protocol parameters, clock, invocation counter
//! <state-dir>/gwn.json               gateway registry (no secret)
//! <state-dir>/gwn.secret.json        gateway secret s            [simulation only]
//! <state-dir>/users/<name>.json      ID_i, smart card, known UAV identities
//! <state-dir>/users/<name>.secret.json  biometric template      [simulation only]
//! <state-dir>/uavs/<name>.json       UAV memory image {C_j, ID_j, TC_IDj}
//! <state-dir>/uavs/<name>.secret.json   PUF device seed          [simulation only]
//! <state-dir>/last_session.json      messages and op tallies of the last run-aka
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fanet_aka::gwn::{Gateway, GatewaySecret, GatewaySnapshot};
use fanet_aka::primitives::{rng_from_seed, BitString, PufDevice, SimRng};
use fanet_aka::uav::MemoryImage;
use fanet_aka::user::SmartCard;
use fanet_aka::{ProtocolConfig, SessionTranscript};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub seed: u64,
    pub protocol: ProtocolConfig,
    pub tick: u32,
    pub invocations: u64,
}

impl Deployment {
    /// A fresh RNG per state-changing invocation, so replaying the same
    /// command sequence reproduces every file.
    pub fn next_rng(&mut self) -> SimRng {
        self.invocations += 1;
        rng_from_seed(self.seed ^ self.invocations.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFile {
    pub id: BitString,
    pub card: SmartCard,
    /// UAV name to hex `ID_j`.
    pub known_uavs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSecret {
    pub simulation_only: bool,
    pub biometric: BitString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSecret {
    pub simulation_only: bool,
    pub device: PufDevice,
}

pub struct Store {
    root: PathBuf,
}

fn valid_name(name: &str) -> Result<(), CliError> {
    let ok = !name.is_empty()
        && name.len() <= 20
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "invalid name {name:?}: use 1 to 20 characters from [A-Za-z0-9_-]"
        )))
    }
}

impl Store {
    pub fn new(root: &Path) -> Store {
        Store {
            root: root.to_path_buf(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn user_path(&self, name: &str) -> Result<PathBuf, CliError> {
        valid_name(name)?;
        Ok(self.path(&format!("users/{name}.json")))
    }

    pub fn uav_path(&self, name: &str) -> Result<PathBuf, CliError> {
        valid_name(name)?;
        Ok(self.path(&format!("uavs/{name}.json")))
    }

    fn read<T: DeserializeOwned>(&self, path: &Path) -> Result<T, CliError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::MissingState(path.into()))
            }
            Err(e) => return Err(CliError::Io(path.into(), e)),
        };
        serde_json::from_str(&text)
            .map_err(|e| CliError::MalformedState(path.into(), e.to_string()))
    }

    fn write<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.into(), e))?;
        }
        let mut text = serde_json::to_string_pretty(value).expect("state serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Io(path.into(), e))
    }

    pub fn exists(&self, path: &Path) -> bool {
        path.exists()
    }

    pub fn deployment(&self) -> Result<Deployment, CliError> {
        self.read(&self.path("deployment.json"))
    }

    pub fn save_deployment(&self, d: &Deployment) -> Result<(), CliError> {
        self.write(&self.path("deployment.json"), d)
    }

    pub fn has_deployment(&self) -> bool {
        self.path("deployment.json").exists()
    }

    pub fn gateway(&self) -> Result<Gateway, CliError> {
        let snap_path = self.path("gwn.json");
        let snap: GatewaySnapshot = self.read(&snap_path)?;
        let secret: GatewaySecret = self.read(&self.path("gwn.secret.json"))?;
        Gateway::restore(snap, secret).map_err(|e| CliError::MalformedState(snap_path, e))
    }

    pub fn save_gateway(&self, g: &Gateway) -> Result<(), CliError> {
        self.write(&self.path("gwn.json"), &g.snapshot())?;
        self.write(&self.path("gwn.secret.json"), &g.secret_file())
    }

    pub fn user(&self, name: &str) -> Result<(UserFile, UserSecret), CliError> {
        let p = self.user_path(name)?;
        let file = self.read(&p)?;
        let secret = self.read(&p.with_extension("secret.json"))?;
        Ok((file, secret))
    }

    pub fn save_user(
        &self,
        name: &str,
        file: &UserFile,
        secret: &UserSecret,
    ) -> Result<(), CliError> {
        let p = self.user_path(name)?;
        self.write(&p, file)?;
        self.write(&p.with_extension("secret.json"), secret)
    }

    /// Party names under `users` or `uavs`, sorted.
    pub fn names(&self, kind: &str) -> Result<Vec<String>, CliError> {
        let dir = self.path(kind);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CliError::Io(dir, e)),
        };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| !n.ends_with(".secret.json"))
            .filter_map(|n| n.strip_suffix(".json").map(str::to_string))
            .collect();
        names.sort();
        Ok(names)
    }

    pub fn uav(&self, name: &str) -> Result<(MemoryImage, UavSecret), CliError> {
        let p = self.uav_path(name)?;
        let memory = self.read(&p)?;
        let secret = self.read(&p.with_extension("secret.json"))?;
        Ok((memory, secret))
    }

    pub fn save_uav(
        &self,
        name: &str,
        memory: &MemoryImage,
        secret: &UavSecret,
    ) -> Result<(), CliError> {
        let p = self.uav_path(name)?;
        self.write(&p, memory)?;
        self.write(&p.with_extension("secret.json"), secret)
    }

    pub fn last_session(&self) -> Result<SessionTranscript, CliError> {
        self.read(&self.path("last_session.json"))
    }

    pub fn save_last_session(&self, t: &SessionTranscript) -> Result<(), CliError> {
        self.write(&self.path("last_session.json"), t)
    }
}
