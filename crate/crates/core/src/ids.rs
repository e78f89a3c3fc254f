//! Opaque identifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            /// Sequential id used by aggregates (`<prefix><n>`).
            pub fn nth(n: usize) -> Self {
                Self(format!(concat!($prefix, "{}"), n))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

opaque_id!(EventId, "e");
opaque_id!(AreaId, "a");
opaque_id!(QuestId, "q");
opaque_id!(ParticipantId, "p");
opaque_id!(TeamId, "t");
opaque_id!(BagId, "b");
opaque_id!(
    /// Bin ids are chosen by whoever registers the bin.
    BinId,
    "bin"
);
