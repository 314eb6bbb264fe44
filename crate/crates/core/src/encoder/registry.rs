//! The model registry: encoder families and maskers, by id.
//!
//! Bundled encoder families (`tiny`, `tiny-512`) build and run with no
//! downloads. The well-known pretrained family ids are registered with their
//! positional capacities so configurations referencing them validate, but
//! building one fails with an environment error: this artifact never fetches
//! weights.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;

use super::model::TinyArch;
use super::EncoderError;
use crate::augment::{AugmentError, BoxedMasker, TableMasker};

/// One registered encoder family.
#[derive(Debug, Clone)]
pub enum EncoderEntry {
    /// A bundled architecture, buildable offline.
    Builtin(TinyArch),
    /// A known pretrained family; capacity is recorded for validation but
    /// weights are not available.
    Pretrained { capacity: usize },
}

impl EncoderEntry {
    pub fn capacity(&self) -> usize {
        match self {
            EncoderEntry::Builtin(arch) => arch.capacity,
            EncoderEntry::Pretrained { capacity } => *capacity,
        }
    }
}

type MaskerFactory = Box<dyn Fn() -> BoxedMasker + Send + Sync>;

enum MaskerEntry {
    Factory(MaskerFactory),
    Pretrained,
}

/// Registry of encoder families and maskers.
pub struct Registry {
    encoders: BTreeMap<String, EncoderEntry>,
    maskers: BTreeMap<String, MaskerEntry>,
}

impl Default for Registry {
    fn default() -> Registry {
        let mut registry = Registry::empty();

        registry.register_encoder(
            "tiny",
            EncoderEntry::Builtin(TinyArch {
                vocab: 256,
                dim: 16,
                heads: 2,
                blocks: 2,
                ff_dim: 32,
                capacity: 128,
            }),
        );
        registry.register_encoder(
            "tiny-512",
            EncoderEntry::Builtin(TinyArch {
                vocab: 256,
                dim: 16,
                heads: 2,
                blocks: 2,
                ff_dim: 32,
                capacity: 512,
            }),
        );
        for id in [
            "bert-base-uncased",
            "roberta-base",
            "xlnet-base-cased",
            "distilbert-base-uncased",
        ] {
            registry.register_encoder(id, EncoderEntry::Pretrained { capacity: 512 });
        }

        registry.register_masker_factory("table", Box::new(|| {
            Box::new(TableMasker::with_default_table()) as BoxedMasker
        }));
        registry
            .maskers
            .insert("distilbert-base-uncased".to_owned(), MaskerEntry::Pretrained);
        registry
    }
}

impl Registry {
    pub fn empty() -> Registry {
        Registry {
            encoders: BTreeMap::new(),
            maskers: BTreeMap::new(),
        }
    }

    pub fn register_encoder(&mut self, id: &str, entry: EncoderEntry) {
        self.encoders.insert(id.to_owned(), entry);
    }

    pub fn register_masker_factory(&mut self, id: &str, factory: MaskerFactory) {
        self.maskers.insert(id.to_owned(), MaskerEntry::Factory(factory));
    }

    pub fn encoder(&self, id: &str) -> Result<&EncoderEntry, EncoderError> {
        self.encoders
            .get(id)
            .ok_or_else(|| EncoderError::UnknownEncoder { id: id.to_owned() })
    }

    pub fn encoder_ids(&self) -> impl Iterator<Item = &str> {
        self.encoders.keys().map(String::as_str)
    }

    /// Instantiates a masker by id.
    pub fn masker(&self, id: &str) -> Result<BoxedMasker, AugmentError> {
        match self.maskers.get(id) {
            Some(MaskerEntry::Factory(factory)) => Ok(factory()),
            Some(MaskerEntry::Pretrained) => {
                Err(AugmentError::MaskerUnavailable { id: id.to_owned() })
            }
            None => Err(AugmentError::UnknownMasker { id: id.to_owned() }),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Masker;

    #[test]
    fn builtin_encoders_resolve() {
        let registry = Registry::default();
        assert!(matches!(
            registry.encoder("tiny"),
            Ok(EncoderEntry::Builtin(_))
        ));
        assert_eq!(registry.encoder("tiny-512").unwrap().capacity(), 512);
        assert!(matches!(
            registry.encoder("roberta-base"),
            Ok(EncoderEntry::Pretrained { capacity: 512 })
        ));
        assert!(matches!(
            registry.encoder("unknown-model"),
            Err(EncoderError::UnknownEncoder { .. })
        ));
    }

    #[test]
    fn masker_resolution() {
        let registry = Registry::default();
        assert!(registry.masker("table").is_ok());
        assert!(matches!(
            registry.masker("distilbert-base-uncased"),
            Err(AugmentError::MaskerUnavailable { .. })
        ));
        assert!(matches!(
            registry.masker("never-registered"),
            Err(AugmentError::UnknownMasker { .. })
        ));
    }

    #[test]
    fn custom_masker_registration() {
        struct Fixed;
        impl Masker for Fixed {
            fn candidates(
                &self,
                _tokens: &[&str],
                _index: usize,
                _k: usize,
            ) -> alloc::vec::Vec<(alloc::string::String, f64)> {
                alloc::vec![("word".into(), 1.0)]
            }
        }
        let mut registry = Registry::default();
        registry.register_masker_factory("fixed", Box::new(|| Box::new(Fixed) as BoxedMasker));
        let masker = registry.masker("fixed").unwrap();
        assert_eq!(masker.candidates(&["x"], 0, 5).len(), 1);
    }
}
