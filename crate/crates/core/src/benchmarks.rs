//! Transmission schemes compared by the experiments. Every scheme runs on
//! the same channels, solver and optimizer; they differ only in which
//! signal components exist and which constraints apply.

use core::fmt;
use core::str::FromStr;

use crate::system::SystemConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Scheme {
    /// Rate splitting with a sensing covariance (the proposed design).
    RsmaIsabc,
    /// Power-domain NOMA with a sensing covariance.
    NomaIsabc,
    /// Rate splitting without sensing.
    RsmaBackcom,
    /// Private streams only, no sensing.
    ConvBackcom,
    /// Private streams plus sensing covariance.
    ConvIsabc,
    /// Sensing covariance only; tags harvest but carry no data.
    SensingOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultipleAccess {
    Rsma,
    Noma,
    Sdma,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeToggles {
    pub has_common_stream: bool,
    pub has_sensing_covariance: bool,
    pub multiple_access: MultipleAccess,
    pub sensing_constraints: bool,
    pub tag_rate_constraints: bool,
}

impl SchemeToggles {
    pub fn has_private_streams(&self) -> bool {
        self.multiple_access != MultipleAccess::None
    }
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::RsmaIsabc,
        Scheme::NomaIsabc,
        Scheme::RsmaBackcom,
        Scheme::ConvBackcom,
        Scheme::ConvIsabc,
        Scheme::SensingOnly,
    ];

    pub fn toggles(self) -> SchemeToggles {
        use MultipleAccess::*;
        let (common, cov, access, sensing, tag) = match self {
            Scheme::RsmaIsabc => (true, true, Rsma, true, true),
            Scheme::NomaIsabc => (false, true, Noma, true, true),
            Scheme::RsmaBackcom => (true, false, Rsma, false, true),
            Scheme::ConvBackcom => (false, false, Sdma, false, true),
            Scheme::ConvIsabc => (false, true, Sdma, true, true),
            Scheme::SensingOnly => (false, true, None, true, false),
        };
        SchemeToggles {
            has_common_stream: common,
            has_sensing_covariance: cov,
            multiple_access: access,
            sensing_constraints: sensing,
            tag_rate_constraints: tag,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RsmaIsabc => "RsmaIsabc",
            Scheme::NomaIsabc => "NomaIsabc",
            Scheme::RsmaBackcom => "RsmaBackcom",
            Scheme::ConvBackcom => "ConvBackcom",
            Scheme::ConvIsabc => "ConvIsabc",
            Scheme::SensingOnly => "SensingOnly",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scheme `{0}`")]
pub struct UnknownScheme(pub alloc::string::String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: alloc::string::String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnknownScheme(s.into()))
    }
}

/// Copy of `cfg` running under `scheme`.
pub fn configure(scheme: Scheme, cfg: &SystemConfig) -> SystemConfig {
    SystemConfig {
        scheme,
        ..cfg.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggle_table_is_total_and_distinct() {
        let mut seen = std::vec::Vec::new();
        for s in Scheme::ALL {
            let t = s.toggles();
            assert!(!seen.contains(&t), "{s} duplicates a toggle set");
            seen.push(t);
        }
    }

    #[test]
    fn sensing_only_has_no_streams() {
        let t = Scheme::SensingOnly.toggles();
        assert!(!t.has_common_stream && !t.has_private_streams());
        assert!(t.has_sensing_covariance && t.sensing_constraints && !t.tag_rate_constraints);
    }

    #[test]
    fn backcom_schemes_drop_sensing() {
        for s in [Scheme::RsmaBackcom, Scheme::ConvBackcom] {
            let t = s.toggles();
            assert!(!t.sensing_constraints && !t.has_sensing_covariance);
        }
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("rsma-isabc".parse::<Scheme>().unwrap(), Scheme::RsmaIsabc);
        assert!("tdma".parse::<Scheme>().is_err());
    }

    #[test]
    fn configure_only_changes_scheme() {
        let base = SystemConfig::default();
        let c = configure(Scheme::NomaIsabc, &base);
        assert_eq!(c.scheme, Scheme::NomaIsabc);
        assert_eq!(c.tx_antennas, base.tx_antennas);
    }
}
