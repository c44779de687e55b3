//! Name-keyed backend registry with a uniform factory interface.

use std::fmt;
use std::sync::Arc;

use crate::backend::{Backend, CircuitBackend, ReferenceBackend};
use crate::error::{Error, Result};
use crate::types::{BackendCapabilities, BackendConfig};

pub type BackendFactory = Arc<dyn Fn(&BackendConfig) -> Result<Arc<dyn Backend>> + Send + Sync>;

/// Names of the engines installed by [`BackendRegistry::with_builtins`].
pub const SIM_ANALYTIC: &str = "sim_analytic";
pub const SIM_SAMPLED: &str = "sim_sampled";
pub const REFERENCE: &str = "reference";

#[derive(Clone)]
pub struct RegistryEntry {
    pub name: String,
    pub factory: BackendFactory,
    pub capabilities: BackendCapabilities,
}

impl fmt::Debug for RegistryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegistryEntry")
            .field("name", &self.name)
            .field("capabilities", &self.capabilities)
            .finish_non_exhaustive()
    }
}

/// Registration happens during setup; afterwards the registry is only read,
/// so a shared `&BackendRegistry` can serve lookups from many threads.
#[derive(Debug, Clone, Default)]
pub struct BackendRegistry {
    entries: Vec<RegistryEntry>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `sim_analytic`, `sim_sampled` and `reference`.
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry
            .register(
                SIM_ANALYTIC,
                Arc::new(|cfg: &BackendConfig| {
                    Ok(Arc::new(CircuitBackend::new(SIM_ANALYTIC, cfg.clone())?) as Arc<dyn Backend>)
                }),
                BackendCapabilities {
                    analytic: true,
                    sampled: true,
                    deterministic: false,
                },
            )
            .expect("fresh registry");
        registry
            .register(
                SIM_SAMPLED,
                Arc::new(|cfg: &BackendConfig| {
                    if cfg.shots.is_none() {
                        return Err(Error::InvalidConfig(format!(
                            "`{SIM_SAMPLED}` requires a shot count"
                        )));
                    }
                    Ok(Arc::new(CircuitBackend::new(SIM_SAMPLED, cfg.clone())?) as Arc<dyn Backend>)
                }),
                BackendCapabilities {
                    analytic: false,
                    sampled: true,
                    deterministic: false,
                },
            )
            .expect("fresh registry");
        registry
            .register(
                REFERENCE,
                Arc::new(|cfg: &BackendConfig| {
                    Ok(Arc::new(ReferenceBackend::new(cfg.clone())?) as Arc<dyn Backend>)
                }),
                BackendCapabilities {
                    analytic: true,
                    sampled: false,
                    deterministic: true,
                },
            )
            .expect("fresh registry");
        registry
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: BackendFactory,
        capabilities: BackendCapabilities,
    ) -> Result<&mut Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        if !capabilities.is_valid() {
            return Err(Error::InvalidConfig(format!(
                "backend `{name}` must support analytic or sampled execution"
            )));
        }
        if self.lookup(&name).is_some() {
            return Err(Error::DuplicateName(name));
        }
        self.entries.push(RegistryEntry {
            name,
            factory,
            capabilities,
        });
        Ok(self)
    }

    pub fn lookup(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Names in registration order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn create(&self, name: &str, config: &BackendConfig) -> Result<Arc<dyn Backend>> {
        let entry = self
            .lookup(name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))?;
        config.validate()?;
        let backend = (entry.factory)(config)?;
        if backend.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                got: backend.dim(),
            });
        }
        Ok(backend)
    }
}
