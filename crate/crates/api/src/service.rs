//! Shared in-memory state over the command logs.
//!
//! Every mutation is computed on a copy of the aggregate, appended to the
//! log, and only then published. One mutex per event (and per bin) gives the
//! single writer the log requires; readers just clone the current `Arc`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use ecoq_core::domain::{BagRecord, EventRecord, EventSpec, GeoPoint, Timestamp, Weight};
use ecoq_core::sgb::{bin_scan_drop, drop_command, ingest_telemetry, BinCommand, BinState, TelemetryReading};
use ecoq_core::storage::{
    append_bin_command, append_command, list_bins, list_events, load_aggregate, load_bin, valid_stream_id, FileLog,
    LogBackend, MemoryLog, StorageError,
};
use ecoq_core::verification::{decode_bag_qr, LabelClassifier, WasteClassifier};
use ecoq_core::{BinId, Command, EventAggregate, EventId, Fact};

use crate::auth::TokenAuthority;
use crate::config::Config;
use crate::error::ApiError;

struct EventSlot {
    agg: Arc<EventAggregate>,
    seq: u64,
}

struct BinSlot {
    state: BinState,
    seq: u64,
}

pub struct Service {
    config: Config,
    tokens: TokenAuthority,
    log: Box<dyn LogBackend>,
    classifier: Box<dyn WasteClassifier>,
    events: RwLock<BTreeMap<EventId, Arc<Mutex<EventSlot>>>>,
    bins: RwLock<BTreeMap<BinId, Arc<Mutex<BinSlot>>>>,
    next_event: Mutex<u64>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panic mid-request never leaves a half-applied slot, so poison is harmless
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn event_number(id: &EventId) -> u64 {
    id.as_str().strip_prefix('e').and_then(|n| n.parse().ok()).unwrap_or(0)
}

impl Service {
    /// Opens the configured data directory, or an in-memory log without one.
    pub fn open(config: Config) -> Result<Self, StorageError> {
        let log: Box<dyn LogBackend> = match &config.data_dir {
            Some(dir) => Box::new(FileLog::open(dir)?),
            None => Box::new(MemoryLog::new()),
        };
        Self::with_log(config, log)
    }

    /// Replays every stream found in `log`.
    pub fn with_log(config: Config, log: Box<dyn LogBackend>) -> Result<Self, StorageError> {
        let mut events = BTreeMap::new();
        let mut next = 1;
        for id in list_events(log.as_ref())? {
            let agg = load_aggregate(log.as_ref(), &id)?;
            let seq = ecoq_core::storage::read_commands(log.as_ref(), &id)?.len() as u64;
            next = next.max(event_number(&id) + 1);
            events.insert(id, Arc::new(Mutex::new(EventSlot { agg: Arc::new(agg), seq })));
        }
        let mut bins = BTreeMap::new();
        for id in list_bins(log.as_ref())? {
            let (state, seq) = load_bin(log.as_ref(), &id)?;
            bins.insert(id, Arc::new(Mutex::new(BinSlot { state, seq })));
        }
        Ok(Self {
            tokens: TokenAuthority::new(&config.organizer_token, &config.participant_token_seed),
            config,
            log,
            classifier: Box::new(LabelClassifier),
            events: RwLock::new(events),
            bins: RwLock::new(bins),
            next_event: Mutex::new(next),
        })
    }

    pub fn with_classifier(mut self, classifier: impl WasteClassifier + 'static) -> Self {
        self.classifier = Box::new(classifier);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn tokens(&self) -> &TokenAuthority {
        &self.tokens
    }

    pub fn classifier(&self) -> &dyn WasteClassifier {
        self.classifier.as_ref()
    }

    fn event_slot(&self, id: &EventId) -> Result<Arc<Mutex<EventSlot>>, ApiError> {
        let events = self.events.read().unwrap_or_else(|e| e.into_inner());
        events.get(id).cloned().ok_or_else(|| ApiError::UnknownEvent(id.to_string()))
    }

    fn bin_slot(&self, id: &BinId) -> Result<Arc<Mutex<BinSlot>>, ApiError> {
        let bins = self.bins.read().unwrap_or_else(|e| e.into_inner());
        bins.get(id).cloned().ok_or_else(|| ApiError::UnknownBin(id.to_string()))
    }

    pub fn create_event(&self, spec: EventSpec, now: Timestamp) -> Result<Arc<EventAggregate>, ApiError> {
        let mut next = lock(&self.next_event);
        let event_id = EventId::nth(*next as usize);
        let command = Command::CreateEvent { event_id: event_id.clone(), spec };
        let (agg, _) = EventAggregate::create(&command)?;
        append_command(self.log.as_ref(), &event_id, 1, command, now)?;
        *next += 1;
        let agg = Arc::new(agg);
        let slot = EventSlot { agg: agg.clone(), seq: 1 };
        self.events
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(event_id, Arc::new(Mutex::new(slot)));
        Ok(agg)
    }

    pub fn execute(
        &self,
        event_id: &EventId,
        command: Command,
        now: Timestamp,
    ) -> Result<(Arc<EventAggregate>, Vec<Fact>), ApiError> {
        let slot = self.event_slot(event_id)?;
        let mut slot = lock(&slot);
        let (next, facts) = slot.agg.apply(&command)?;
        append_command(self.log.as_ref(), event_id, slot.seq + 1, command, now)?;
        slot.seq += 1;
        slot.agg = Arc::new(next);
        Ok((slot.agg.clone(), facts))
    }

    pub fn snapshot(&self, event_id: &EventId) -> Result<Arc<EventAggregate>, ApiError> {
        let slot = self.event_slot(event_id)?;
        let agg = lock(&slot).agg.clone();
        Ok(agg)
    }

    pub fn event_records(&self) -> Vec<EventRecord> {
        let slots: Vec<_> = self.events.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
        slots.iter().map(|s| lock(s).agg.event.clone()).collect()
    }

    pub fn register_bin(&self, bin_id: BinId, location: GeoPoint, now: Timestamp) -> Result<BinState, ApiError> {
        if !valid_stream_id(bin_id.as_str()) {
            return Err(ApiError::BadRequest(format!("invalid bin id `{bin_id}`")));
        }
        location.validate()?;
        let mut bins = self.bins.write().unwrap_or_else(|e| e.into_inner());
        if bins.contains_key(&bin_id) {
            return Err(ApiError::BinExists(bin_id.to_string()));
        }
        let command = BinCommand::Register {
            bin_id: bin_id.clone(),
            location,
            now,
        };
        append_bin_command(self.log.as_ref(), &bin_id, 1, command, now)?;
        let state = BinState::new(bin_id.clone(), location, now);
        bins.insert(bin_id, Arc::new(Mutex::new(BinSlot { state: state.clone(), seq: 1 })));
        Ok(state)
    }

    pub fn bin(&self, bin_id: &BinId) -> Result<BinState, ApiError> {
        let slot = self.bin_slot(bin_id)?;
        let state = lock(&slot).state.clone();
        Ok(state)
    }

    pub fn bin_states(&self) -> Vec<BinState> {
        let slots: Vec<_> = self.bins.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
        slots.iter().map(|s| lock(s).state.clone()).collect()
    }

    pub fn telemetry(&self, reading: TelemetryReading, now: Timestamp) -> Result<BinState, ApiError> {
        let slot = self.bin_slot(&reading.bin_id)?;
        let mut slot = lock(&slot);
        let next = ingest_telemetry(&slot.state, &reading)?;
        append_bin_command(
            self.log.as_ref(),
            &reading.bin_id.clone(),
            slot.seq + 1,
            BinCommand::Telemetry { reading },
            now,
        )?;
        slot.seq += 1;
        slot.state = next;
        Ok(slot.state.clone())
    }

    /// A bin drop. The bag goes to the event log first, then the weight to
    /// the bin log. Locks are taken bin first, event second.
    pub fn scan(
        &self,
        bin_id: &BinId,
        qr_payload: &str,
        measured_weight_kg: f64,
        now: Timestamp,
    ) -> Result<(BinState, BagRecord), ApiError> {
        let bin_slot = self.bin_slot(bin_id)?;
        let mut bin = lock(&bin_slot);
        let claim = decode_bag_qr(qr_payload).map_err(ecoq_core::sgb::BinError::BadClaim)?;
        let event_slot = self
            .event_slot(&claim.event_id)
            .map_err(|_| ecoq_core::sgb::BinError::UnknownEvent(claim.event_id.to_string()))?;
        let mut event = lock(&event_slot);

        let mut agg = (*event.agg).clone();
        let (next_bin, bag) = bin_scan_drop(&bin.state, qr_payload, measured_weight_kg, now, &mut agg)?;
        let weight: Weight = bag.weight_kg.expect("bin bags carry a weight");

        append_command(
            self.log.as_ref(),
            &claim.event_id,
            event.seq + 1,
            drop_command(&claim, weight, now),
            now,
        )?;
        event.seq += 1;
        event.agg = Arc::new(agg);

        append_bin_command(
            self.log.as_ref(),
            bin_id,
            bin.seq + 1,
            BinCommand::Drop { weight_kg: weight, now },
            now,
        )?;
        bin.seq += 1;
        bin.state = next_bin;
        Ok((bin.state.clone(), bag))
    }
}
