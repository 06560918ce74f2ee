//! Centralized replica catalogue plus the per-site replica stores it
//! indexes. The two views are updated together so they cannot drift.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::SimTime;
use crate::error::{Error, Result};
use crate::ids::{FileId, SiteId};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replica {
    pub size: u64,
    pub last_access: SimTime,
    /// Master copies are pinned and never evicted.
    pub pinned: bool,
}

/// Storage element of one site.
#[derive(Clone, Debug, Default)]
pub struct ReplicaStore {
    capacity: u64,
    used: u64,
    /// Space promised to in-flight transfers that will persist here.
    reserved: u64,
    replicas: BTreeMap<FileId, Replica>,
}

impl ReplicaStore {
    pub fn new(capacity: u64) -> Self {
        ReplicaStore {
            capacity,
            ..Default::default()
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn reserved(&self) -> u64 {
        self.reserved
    }

    pub fn free(&self) -> u64 {
        self.capacity - self.used - self.reserved
    }

    pub fn get(&self, lfn: FileId) -> Option<&Replica> {
        self.replicas.get(&lfn)
    }

    pub fn contains(&self, lfn: FileId) -> bool {
        self.replicas.contains_key(&lfn)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FileId, &Replica)> {
        self.replicas.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ReplicaCatalog {
    file_sizes: Vec<u64>,
    holders: Vec<BTreeSet<SiteId>>,
    stores: Vec<ReplicaStore>,
}

impl ReplicaCatalog {
    /// Empty catalogue for files of the given sizes (indexed by `FileId`)
    /// over the sites of `topology`.
    pub fn new(file_sizes: Vec<u64>, topology: &Topology) -> Self {
        let holders = vec![BTreeSet::new(); file_sizes.len()];
        let stores = topology
            .sites()
            .iter()
            .map(|s| ReplicaStore::new(s.storage_bytes))
            .collect();
        ReplicaCatalog {
            file_sizes,
            holders,
            stores,
        }
    }

    pub fn n_files(&self) -> usize {
        self.file_sizes.len()
    }

    pub fn n_sites(&self) -> usize {
        self.stores.len()
    }

    pub fn file_size(&self, lfn: FileId) -> Result<u64> {
        self.file_sizes
            .get(lfn.index())
            .copied()
            .ok_or_else(|| Error::config("lfn", format!("unknown logical file {lfn}")))
    }

    pub fn store(&self, site: SiteId) -> &ReplicaStore {
        &self.stores[site.index()]
    }

    fn store_mut(&mut self, site: SiteId) -> Result<&mut ReplicaStore> {
        self.stores
            .get_mut(site.index())
            .ok_or_else(|| Error::logic(format!("unknown site {site}")))
    }

    pub fn holds(&self, site: SiteId, lfn: FileId) -> bool {
        self.stores
            .get(site.index())
            .is_some_and(|s| s.contains(lfn))
    }

    /// Free bytes at `site`: capacity less held and reserved bytes.
    pub fn free_space(&self, site: SiteId) -> u64 {
        self.store(site).free()
    }

    /// All sites holding `lfn`, in ascending id order.
    pub fn locate(&self, lfn: FileId) -> Result<&BTreeSet<SiteId>> {
        self.holders
            .get(lfn.index())
            .ok_or_else(|| Error::config("lfn", format!("unknown logical file {lfn}")))
    }

    pub fn register(
        &mut self,
        lfn: FileId,
        site: SiteId,
        size: u64,
        time: SimTime,
        pinned: bool,
    ) -> Result<()> {
        if lfn.index() >= self.holders.len() {
            return Err(Error::logic(format!("register of unknown file {lfn}")));
        }
        let store = self.store_mut(site)?;
        if store.contains(lfn) {
            return Err(Error::logic(format!("{lfn} already held at site {site}")));
        }
        if store.free() < size {
            return Err(Error::logic(format!(
                "no room for {lfn} ({size} B) at site {site}: {} B free",
                store.free()
            )));
        }
        store.used += size;
        store.replicas.insert(
            lfn,
            Replica {
                size,
                last_access: time,
                pinned,
            },
        );
        self.holders[lfn.index()].insert(site);
        Ok(())
    }

    pub fn unregister(&mut self, lfn: FileId, site: SiteId) -> Result<()> {
        let copies = self.locate(lfn)?.len();
        let store = self.store_mut(site)?;
        let replica = store
            .replicas
            .get(&lfn)
            .ok_or_else(|| Error::logic(format!("{lfn} not held at site {site}")))?;
        if replica.pinned {
            return Err(Error::logic(format!(
                "refusing to delete master {lfn} at site {site}"
            )));
        }
        if copies <= 1 {
            return Err(Error::logic(format!(
                "refusing to delete last copy of {lfn}"
            )));
        }
        store.used -= replica.size;
        store.replicas.remove(&lfn);
        self.holders[lfn.index()].remove(&site);
        Ok(())
    }

    pub fn touch(&mut self, lfn: FileId, site: SiteId, time: SimTime) -> Result<()> {
        let r = self
            .store_mut(site)?
            .replicas
            .get_mut(&lfn)
            .ok_or_else(|| Error::logic(format!("touch of {lfn} not held at site {site}")))?;
        r.last_access = time;
        Ok(())
    }

    /// Sets aside `size` bytes at `site` for an incoming replica.
    pub fn reserve(&mut self, site: SiteId, size: u64) -> Result<()> {
        let store = self.store_mut(site)?;
        if store.free() < size {
            return Err(Error::logic(format!(
                "cannot reserve {size} B at site {site}"
            )));
        }
        store.reserved += size;
        Ok(())
    }

    pub fn release(&mut self, site: SiteId, size: u64) -> Result<()> {
        let store = self.store_mut(site)?;
        if store.reserved < size {
            return Err(Error::logic(format!(
                "release of unreserved space at site {site}"
            )));
        }
        store.reserved -= size;
        Ok(())
    }

    /// Checks the catalogue against the stores: same membership both ways,
    /// byte counts add up, nothing over capacity, every file has a copy
    /// and exactly one pinned master.
    pub fn check_consistency(&self) -> Result<()> {
        for (i, store) in self.stores.iter().enumerate() {
            let site = SiteId(i as u32);
            let sum: u64 = store.replicas.values().map(|r| r.size).sum();
            if sum != store.used {
                return Err(Error::logic(format!(
                    "site {site}: used {} != sum {sum}",
                    store.used
                )));
            }
            if store.used + store.reserved > store.capacity {
                return Err(Error::logic(format!("site {site} over capacity")));
            }
            for &lfn in store.replicas.keys() {
                if !self.holders[lfn.index()].contains(&site) {
                    return Err(Error::logic(format!(
                        "{lfn} at {site} missing from catalogue"
                    )));
                }
            }
        }
        for (i, sites) in self.holders.iter().enumerate() {
            let lfn = FileId(i as u32);
            if sites.is_empty() {
                return Err(Error::logic(format!("{lfn} has no replica")));
            }
            let mut pinned = 0;
            for s in sites {
                match self.stores[s.index()].replicas.get(&lfn) {
                    Some(r) => pinned += usize::from(r.pinned),
                    None => {
                        return Err(Error::logic(format!(
                            "catalogue lists {lfn} at {s}, store does not"
                        )))
                    }
                }
            }
            if pinned != 1 {
                return Err(Error::logic(format!("{lfn} has {pinned} pinned copies")));
            }
        }
        Ok(())
    }
}
