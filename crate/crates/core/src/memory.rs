//! Layer L3: the robot's persisted knowledge. Facility map, thermal baselines
//! per inspection point, and the personnel re-identification gallery, held in
//! one versioned JSON document.

use crate::geometry::{point_in_polygon, Point2, Pose2};
use crate::grid::OccupancyGrid;
use crate::perception::ThermalImage;
use crate::worldsim::{FacilityWorld, PersonnelEntry};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MEMORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema error at `{field}` (line {line}): {message}")]
    Schema {
        path: PathBuf,
        field: String,
        line: usize,
        message: String,
    },
    #[error("invalid store: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapItemKind {
    Equipment,
    Valve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquipmentEntry {
    pub position: Point2,
    pub kind: String,
    #[serde(default)]
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValveEntry {
    pub position: Point2,
    pub pipe_id: String,
    pub arclength_pos: f64,
    pub setpoint_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeEntry {
    pub polyline: Vec<Point2>,
    pub baseline_temp: f64,
    pub limit_temp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneEntry {
    pub polygon: Vec<Point2>,
    pub restricted: bool,
    pub allowed_windows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionEntry {
    pub pose: Pose2,
    pub pipe_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityMapStore {
    pub grid: OccupancyGrid,
    pub equipment: BTreeMap<String, EquipmentEntry>,
    pub valves: BTreeMap<String, ValveEntry>,
    pub pipes: BTreeMap<String, PipeEntry>,
    pub zones: BTreeMap<String, ZoneEntry>,
    pub inspection_points: BTreeMap<String, InspectionEntry>,
}

/// Result of a zone lookup: `(zone id, restricted, within an allowed window)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneStatus {
    pub zone_id: Option<String>,
    pub restricted: bool,
    pub within_allowed: bool,
}

impl FacilityMapStore {
    pub fn empty(grid: OccupancyGrid) -> Self {
        Self {
            grid,
            equipment: BTreeMap::new(),
            valves: BTreeMap::new(),
            pipes: BTreeMap::new(),
            zones: BTreeMap::new(),
            inspection_points: BTreeMap::new(),
        }
    }

    /// Survey copy of the world's static layout (no hazards, no people).
    pub fn from_world(world: &FacilityWorld) -> Self {
        let mut s = Self::empty(world.grid.clone());
        for e in &world.equipment {
            s.equipment.insert(
                e.id.clone(),
                EquipmentEntry {
                    position: e.position,
                    kind: e.kind.clone(),
                    zone: e.zone.clone(),
                },
            );
        }
        for v in &world.valves {
            if let Some(position) = world.valve_position(v) {
                s.valves.insert(
                    v.id.clone(),
                    ValveEntry {
                        position,
                        pipe_id: v.pipe_id.clone(),
                        arclength_pos: v.arclength_pos,
                        setpoint_fraction: v.setpoint_fraction,
                    },
                );
            }
        }
        for p in &world.pipes {
            s.pipes.insert(
                p.id.clone(),
                PipeEntry {
                    polyline: p.polyline.clone(),
                    baseline_temp: p.baseline_temp,
                    limit_temp: p.limit_temp,
                },
            );
        }
        for z in &world.zones {
            s.zones.insert(
                z.id.clone(),
                ZoneEntry {
                    polygon: z.polygon.clone(),
                    restricted: z.restricted,
                    allowed_windows: z.allowed_windows.clone(),
                },
            );
        }
        for ip in &world.inspection_points {
            s.inspection_points.insert(
                ip.id.clone(),
                InspectionEntry {
                    pose: ip.pose,
                    pipe_id: ip.pipe_id.clone(),
                },
            );
        }
        s
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        for (id, ip) in &self.inspection_points {
            if !self.pipes.contains_key(&ip.pipe_id) {
                return Err(MemoryError::Invalid(format!(
                    "inspection point `{id}` references unknown pipe `{}`",
                    ip.pipe_id
                )));
            }
        }
        for (id, v) in &self.valves {
            if !self.pipes.contains_key(&v.pipe_id) {
                return Err(MemoryError::Invalid(format!("valve `{id}` references unknown pipe `{}`", v.pipe_id)));
            }
        }
        if let Some(id) = self.equipment.keys().find(|k| self.valves.contains_key(*k)) {
            return Err(MemoryError::Invalid(format!("id `{id}` used for both equipment and valve")));
        }
        Ok(())
    }

    /// Equipment and valves within `radius` of `point`, nearest first, ties by id.
    pub fn equipment_near(&self, point: &Point2, radius: f64) -> Vec<(String, f64, MapItemKind)> {
        let mut out: Vec<(String, f64, MapItemKind)> = self
            .equipment
            .iter()
            .map(|(id, e)| (id.clone(), e.position.distance(point), MapItemKind::Equipment))
            .chain(
                self.valves
                    .iter()
                    .map(|(id, v)| (id.clone(), v.position.distance(point), MapItemKind::Valve)),
            )
            .filter(|(_, d, _)| *d <= radius)
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn position_of(&self, id: &str) -> Option<Point2> {
        self.equipment
            .get(id)
            .map(|e| e.position)
            .or_else(|| self.valves.get(id).map(|v| v.position))
    }

    /// Closed boundaries; overlapping zones resolve to the smallest id.
    pub fn zone_status(&self, point: &Point2, time_of_day: f64) -> ZoneStatus {
        let Some((id, zone)) = self.zones.iter().find(|(_, z)| point_in_polygon(point, &z.polygon)) else {
            return ZoneStatus {
                zone_id: None,
                restricted: false,
                within_allowed: true,
            };
        };
        let tod = time_of_day.rem_euclid(86_400.0);
        let within = zone.allowed_windows.iter().any(|&(a, b)| tod >= a && tod < b);
        ZoneStatus {
            zone_id: Some(id.clone()),
            restricted: zone.restricted,
            within_allowed: within,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub image: ThermalImage,
    pub captured_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStore {
    pub width: usize,
    pub height: usize,
    pub entries: BTreeMap<String, BaselineEntry>,
}

impl BaselineStore {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, image: ThermalImage, captured_at: f64) -> Result<(), MemoryError> {
        if image.dims() != (self.width, self.height) {
            return Err(MemoryError::Invalid(format!(
                "baseline is {:?}, store expects {}x{}",
                image.dims(),
                self.width,
                self.height
            )));
        }
        self.entries.insert(id.into(), BaselineEntry { image, captured_at });
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&BaselineEntry> {
        self.entries.get(id)
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        for (id, e) in &self.entries {
            if e.image.dims() != (self.width, self.height) {
                return Err(MemoryError::Invalid(format!("baseline `{id}` has wrong dimensions")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonnelRecord {
    pub embedding: Vec<f64>,
    pub authorized: bool,
    /// The embedding was rescaled to unit norm at insertion.
    pub normalized_on_insert: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonnelDb {
    records: BTreeMap<String, PersonnelRecord>,
}

const UNIT_TOLERANCE: f64 = 1e-9;

impl PersonnelDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: &[PersonnelEntry]) -> Result<Self, MemoryError> {
        let mut db = Self::new();
        for e in entries {
            db.insert(&e.id, e.embedding.clone(), e.authorized)?;
        }
        Ok(db)
    }

    /// Non-unit embeddings are normalized and flagged; zero or non-finite ones
    /// and duplicate ids are rejected.
    pub fn insert(&mut self, id: &str, embedding: Vec<f64>, authorized: bool) -> Result<(), MemoryError> {
        if self.records.contains_key(id) {
            return Err(MemoryError::Invalid(format!("duplicate personnel id `{id}`")));
        }
        let n = embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(MemoryError::Invalid(format!("`{id}`: embedding norm must be finite and non-zero")));
        }
        let normalize = (n - 1.0).abs() > UNIT_TOLERANCE;
        let embedding = if normalize {
            embedding.into_iter().map(|x| x / n).collect()
        } else {
            embedding
        };
        self.records.insert(
            id.to_string(),
            PersonnelRecord {
                embedding,
                authorized,
                normalized_on_insert: normalize,
            },
        );
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PersonnelRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &PersonnelRecord)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        for (id, r) in &self.records {
            let n = r.embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-6 {
                return Err(MemoryError::Invalid(format!("`{id}`: stored embedding is not unit norm")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryStore {
    pub schema_version: u32,
    pub facility: FacilityMapStore,
    pub baselines: BaselineStore,
    pub personnel: PersonnelDb,
}

impl MemoryStore {
    pub fn new(facility: FacilityMapStore, baselines: BaselineStore, personnel: PersonnelDb) -> Self {
        Self {
            schema_version: MEMORY_SCHEMA_VERSION,
            facility,
            baselines,
            personnel,
        }
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.schema_version != MEMORY_SCHEMA_VERSION {
            return Err(MemoryError::Invalid(format!(
                "unsupported schema_version {} (expected {MEMORY_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.facility.validate()?;
        self.baselines.validate()?;
        self.personnel.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("memory store serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self, MemoryError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let store: MemoryStore = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            MemoryError::Schema {
                path: origin.to_path_buf(),
                field,
                line: inner.line(),
                message: inner.to_string(),
            }
        })?;
        store.validate()?;
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MemoryError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| MemoryError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MemoryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MemoryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + s, y0),
            Point2::new(x0 + s, y0 + s),
            Point2::new(x0, y0 + s),
        ]
    }

    fn store() -> FacilityMapStore {
        let mut s = FacilityMapStore::empty(OccupancyGrid::new(10, 10, 1.0));
        s.zones.insert(
            "R".into(),
            ZoneEntry {
                polygon: square(0.0, 0.0, 4.0),
                restricted: true,
                allowed_windows: vec![(8.0 * 3600.0, 18.0 * 3600.0)],
            },
        );
        s
    }

    #[test]
    fn empty_store_has_nothing_near() {
        let s = FacilityMapStore::empty(OccupancyGrid::new(2, 2, 1.0));
        assert!(s.equipment_near(&Point2::new(0.0, 0.0), 5.0).is_empty());
    }

    #[test]
    fn zone_status_cases() {
        let s = store();
        let open = s.zone_status(&Point2::new(8.0, 8.0), 0.0);
        assert_eq!(open, ZoneStatus { zone_id: None, restricted: false, within_allowed: true });
        let night = s.zone_status(&Point2::new(2.0, 2.0), 2.0 * 3600.0);
        assert_eq!(night, ZoneStatus { zone_id: Some("R".into()), restricted: true, within_allowed: false });
        let edge = s.zone_status(&Point2::new(4.0, 2.0), 12.0 * 3600.0);
        assert_eq!(edge.zone_id.as_deref(), Some("R"));
        assert!(edge.within_allowed);
    }

    #[test]
    fn personnel_normalizes_and_flags() {
        let mut db = PersonnelDb::new();
        db.insert("a", vec![3.0, 4.0], true).unwrap();
        db.insert("b", vec![1.0, 0.0], false).unwrap();
        assert!(db.get("a").unwrap().normalized_on_insert);
        assert!(!db.get("b").unwrap().normalized_on_insert);
        assert!((db.get("a").unwrap().embedding[0] - 0.6).abs() < 1e-12);
        assert!(db.insert("a", vec![1.0, 0.0], true).is_err());
        assert!(db.insert("z", vec![0.0, 0.0], true).is_err());
    }
}
