//! Two-level grid network: regions of sites joined by a fast LAN, regions
//! joined to each other by a slower WAN.

use std::collections::BTreeMap;

use crate::engine::SimTime;
use crate::error::{Error, Result};
use crate::ids::{RegionId, SiteId};

/// Bits per second in one Mbps (decimal units).
pub const BPS_PER_MBPS: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub id: RegionId,
    pub sites: Vec<SiteId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub id: SiteId,
    pub region: RegionId,
    /// Compute capacity in million instructions per second.
    pub mips: u64,
    pub storage_bytes: u64,
}

/// Link bandwidths in bits per second.
#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthModel {
    pub lan_bps: u64,
    pub wan_bps: u64,
    /// Per region-pair WAN overrides, keyed with the smaller region first.
    pub wan_overrides: BTreeMap<(RegionId, RegionId), u64>,
}

impl BandwidthModel {
    pub fn from_mbps(lan_mbps: f64, wan_mbps: f64) -> Result<Self> {
        let lan_bps = mbps_to_bps("topology.lan_mbps", lan_mbps)?;
        let wan_bps = mbps_to_bps("topology.wan_mbps", wan_mbps)?;
        if wan_bps > lan_bps {
            return Err(Error::config(
                "topology.wan_mbps",
                format!("WAN bandwidth {wan_mbps} Mbps exceeds LAN bandwidth {lan_mbps} Mbps"),
            ));
        }
        Ok(BandwidthModel {
            lan_bps,
            wan_bps,
            wan_overrides: BTreeMap::new(),
        })
    }

    pub fn set_override(&mut self, a: RegionId, b: RegionId, mbps: f64) -> Result<()> {
        let key = format!("topology.wan_override.{}-{}", a, b);
        let bps = mbps_to_bps(&key, mbps)?;
        if bps > self.lan_bps {
            return Err(Error::config(key, "override exceeds LAN bandwidth"));
        }
        if a == b {
            return Err(Error::config(
                key,
                "override must name two distinct regions",
            ));
        }
        self.wan_overrides.insert((a.min(b), a.max(b)), bps);
        Ok(())
    }

    fn inter(&self, a: RegionId, b: RegionId) -> u64 {
        self.wan_overrides
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(self.wan_bps)
    }
}

fn mbps_to_bps(key: &str, mbps: f64) -> Result<u64> {
    if !(mbps.is_finite() && mbps > 0.0) {
        return Err(Error::config(
            key,
            format!("bandwidth must be positive, got {mbps}"),
        ));
    }
    let bps = (mbps * BPS_PER_MBPS).round();
    if bps < 1.0 || bps > u64::MAX as f64 {
        return Err(Error::config(
            key,
            format!("bandwidth {mbps} Mbps out of range"),
        ));
    }
    Ok(bps as u64)
}

#[derive(Clone, Debug)]
pub struct Topology {
    regions: Vec<Region>,
    sites: Vec<Site>,
    bandwidth: BandwidthModel,
}

impl Topology {
    /// Builds `n_regions` regions of `sites_per_region` identical sites,
    /// numbering sites region by region.
    pub fn uniform(
        n_regions: u32,
        sites_per_region: u32,
        mips: u64,
        storage_bytes: u64,
        bandwidth: BandwidthModel,
    ) -> Result<Self> {
        if n_regions == 0 {
            return Err(Error::config("topology.n_regions", "must be positive"));
        }
        if sites_per_region == 0 {
            return Err(Error::config(
                "topology.sites_per_region",
                "must be positive",
            ));
        }
        if mips == 0 {
            return Err(Error::config("topology.mips", "must be positive"));
        }
        if storage_bytes == 0 {
            return Err(Error::config("topology.storage_bytes", "must be positive"));
        }
        let mut regions = Vec::new();
        let mut sites = Vec::new();
        for r in 0..n_regions {
            let region = RegionId(r);
            let ids: Vec<SiteId> = (0..sites_per_region)
                .map(|k| SiteId(r * sites_per_region + k))
                .collect();
            for &id in &ids {
                sites.push(Site {
                    id,
                    region,
                    mips,
                    storage_bytes,
                });
            }
            regions.push(Region {
                id: region,
                sites: ids,
            });
        }
        for &(a, b) in bandwidth.wan_overrides.keys() {
            if b.0 >= n_regions {
                return Err(Error::config(
                    format!("topology.wan_override.{a}-{b}"),
                    "unknown region",
                ));
            }
        }
        Ok(Topology {
            regions,
            sites,
            bandwidth,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn bandwidth(&self) -> &BandwidthModel {
        &self.bandwidth
    }

    pub fn site(&self, id: SiteId) -> Result<&Site> {
        self.sites
            .get(id.index())
            .ok_or_else(|| Error::config("site", format!("unknown site id {id}")))
    }

    pub fn region_of(&self, id: SiteId) -> Result<RegionId> {
        Ok(self.site(id)?.region)
    }

    pub fn is_inter_region(&self, a: SiteId, b: SiteId) -> Result<bool> {
        Ok(self.region_of(a)? != self.region_of(b)?)
    }

    /// Nominal link bandwidth in bits per second. `a == b` reports the LAN
    /// rate, though local access never consults it.
    pub fn bandwidth_between(&self, a: SiteId, b: SiteId) -> Result<u64> {
        let (ra, rb) = (self.region_of(a)?, self.region_of(b)?);
        Ok(if ra == rb {
            self.bandwidth.lan_bps
        } else {
            self.bandwidth.inter(ra, rb)
        })
    }

    pub fn bandwidth_mbps(&self, a: SiteId, b: SiteId) -> Result<f64> {
        Ok(self.bandwidth_between(a, b)? as f64 / BPS_PER_MBPS)
    }

    /// Time to move `size_bytes` from `a` to `b`, rounded up to the next
    /// microsecond. Local access is free.
    pub fn transfer_time(&self, size_bytes: u64, a: SiteId, b: SiteId) -> Result<SimTime> {
        if a == b {
            self.site(a)?;
            return Ok(SimTime::ZERO);
        }
        let bps = u128::from(self.bandwidth_between(a, b)?);
        let bit_micros = u128::from(size_bytes) * 8 * 1_000_000;
        let us = bit_micros.div_ceil(bps);
        Ok(SimTime(us as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_grid() -> Topology {
        Topology::uniform(
            4,
            13,
            1000,
            10_000_000_000,
            BandwidthModel::from_mbps(1000.0, 10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn intra_and_inter_bandwidth() {
        let t = default_grid();
        assert_eq!(t.bandwidth_mbps(SiteId(0), SiteId(5)).unwrap(), 1000.0);
        // site 30 lives in region 2
        assert_eq!(t.region_of(SiteId(30)).unwrap(), RegionId(2));
        assert_eq!(t.bandwidth_mbps(SiteId(0), SiteId(30)).unwrap(), 10.0);
        assert_eq!(t.bandwidth_mbps(SiteId(4), SiteId(4)).unwrap(), 1000.0);
    }

    #[test]
    fn file_transfer_times() {
        let t = default_grid();
        let f = 500_000_000;
        assert_eq!(
            t.transfer_time(f, SiteId(0), SiteId(30)).unwrap(),
            SimTime::from_secs(400)
        );
        assert_eq!(
            t.transfer_time(f, SiteId(0), SiteId(1)).unwrap(),
            SimTime::from_secs(4)
        );
        assert_eq!(
            t.transfer_time(f, SiteId(9), SiteId(9)).unwrap(),
            SimTime::ZERO
        );
    }

    #[test]
    fn transfer_time_rounds_up() {
        let t = default_grid();
        // 1 byte over 10 Mbps is 0.8 us.
        assert_eq!(
            t.transfer_time(1, SiteId(0), SiteId(40)).unwrap(),
            SimTime(1)
        );
    }

    #[test]
    fn region_membership() {
        let t = default_grid();
        assert!(!t.is_inter_region(SiteId(0), SiteId(12)).unwrap());
        assert!(t.is_inter_region(SiteId(12), SiteId(13)).unwrap());
        assert!(!t.is_inter_region(SiteId(3), SiteId(3)).unwrap());
        assert!(t.is_inter_region(SiteId(0), SiteId(52)).is_err());
        assert!(t.bandwidth_between(SiteId(99), SiteId(0)).is_err());
    }

    #[test]
    fn wan_above_lan_rejected() {
        assert!(BandwidthModel::from_mbps(10.0, 100.0).is_err());
        assert!(BandwidthModel::from_mbps(10.0, 0.0).is_err());
    }

    #[test]
    fn overrides_apply_to_one_pair() {
        let mut bw = BandwidthModel::from_mbps(1000.0, 10.0).unwrap();
        bw.set_override(RegionId(2), RegionId(0), 100.0).unwrap();
        let t = Topology::uniform(3, 2, 1000, 1, bw).unwrap();
        assert_eq!(t.bandwidth_mbps(SiteId(0), SiteId(4)).unwrap(), 100.0);
        assert_eq!(t.bandwidth_mbps(SiteId(5), SiteId(1)).unwrap(), 100.0);
        assert_eq!(t.bandwidth_mbps(SiteId(0), SiteId(2)).unwrap(), 10.0);
    }

    proptest! {
        #[test]
        fn symmetric_hierarchical_monotone(
            a in 0u32..52, b in 0u32..52, c in 0u32..52, d in 0u32..52,
            s in 0u64..10_000_000_000, s2 in 0u64..10_000_000_000,
        ) {
            let t = default_grid();
            let (a, b, c, d) = (SiteId(a), SiteId(b), SiteId(c), SiteId(d));
            prop_assert_eq!(t.bandwidth_between(a, b).unwrap(), t.bandwidth_between(b, a).unwrap());
            prop_assert_eq!(t.transfer_time(s, a, b).unwrap(), t.transfer_time(s, b, a).unwrap());
            if t.is_inter_region(a, b).unwrap() && !t.is_inter_region(c, d).unwrap() {
                prop_assert!(t.transfer_time(s, a, b).unwrap() >= t.transfer_time(s, c, d).unwrap());
            }
            let (lo, hi) = (s.min(s2), s.max(s2));
            prop_assert!(t.transfer_time(lo, a, b).unwrap() <= t.transfer_time(hi, a, b).unwrap());
        }
    }
}
