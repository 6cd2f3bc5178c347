//! Synthetic crash-corpus generator.
//!
//! Produces labeled records whose statistics track real-world crash
//! telemetry: log-normal stack depths (median ≈ 9, mean ≈ 16, capped at
//! 255), roughly two thirds of blames on the top frame with a small deep
//! tail, a memory-dominated problem-class mix, and about four distinct
//! binaries per stack.
//!
//! The blame label follows a construction rule the models have to recover:
//! scanning top-down, logging/telemetry wrappers, OS frames, and standard
//! library frames are skipped and the first application or driver frame is
//! blamed. Three classes override it:
//!
//! - `STACK_OVERFLOW` blames the top of the repeated call cycle, which may
//!   sit below a non-recursive leaf frame;
//! - `CPP_EXCEPTION` blames the frame directly below the throw-helper block
//!   even when that frame belongs to a normally-skipped pool;
//! - `NULL_POINTER_READ` also skips *driver* frames and blames the first
//!   application frame — a null handle is the app's bug even when a driver
//!   sits on top of it. A configurable share of these records carries a
//!   driver-laced skip block, so the same surface shape (drivers above an
//!   app frame) is blamed at the driver for one class and below it for
//!   another.
//!
//! Which case applies is recoverable from the stack, but only
//! statistically: memory-class records drop one or two fault-path
//! breadcrumbs below the blame, drawn from a single shared `ntdll` pool
//! with class-tilted, overlapping weights. No single crumb is conclusive.
//! On top of that, symbols are stripped per pool (driver modules most,
//! app modules occasionally), replacing the frame symbol with `unknown`
//! plus a raw module offset, as unsymbolized telemetry does.
//!
//! Generation is deterministic: each record draws from its own ChaCha
//! stream keyed by `(seed, record index)`, so a corpus is a pure function
//! of its config and any record is reproducible in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CrashRecord, Fnv1a, Frame};
use crate::error::{config as config_err, Result};

/// Problem classes emitted by the generator, in mixture order.
pub const CLASS_INVALID_POINTER_READ: &str = "INVALID_POINTER_READ";
pub const CLASS_NULL_POINTER_READ: &str = "NULL_POINTER_READ";
pub const CLASS_HEAP_CORRUPTION: &str = "HEAP_CORRUPTION";
pub const CLASS_APPLICATION_FAULT: &str = "APPLICATION_FAULT";
pub const CLASS_STACK_OVERFLOW: &str = "STACK_OVERFLOW";
pub const CLASS_CPP_EXCEPTION: &str = "CPP_EXCEPTION";

/// One synthetic application: its binaries and method vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppSpec {
    /// App name as recorded on crash reports, e.g. `aurora`.
    pub name: String,
    /// Code binaries; the first is the primary module.
    pub binaries: Vec<String>,
    /// Side-by-side helper binary hosting crash/telemetry wrappers.
    pub helper_binary: String,
    /// Namespace paths for app frames.
    pub namespaces: Vec<String>,
    /// Ordinary method names.
    pub methods: Vec<String>,
    /// Crash-prone method names (memory/buffer/pointer flavored).
    pub crash_methods: Vec<String>,
    /// Methods used to build stack-overflow call cycles.
    pub recursive_methods: Vec<String>,
}

/// Mixture over frame pools used to fill a stack below the blamed frame.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoolMix {
    pub app: f64,
    pub driver: f64,
    pub system: f64,
    pub stdlib: f64,
    pub wrapper: f64,
}

impl PoolMix {
    fn sum(&self) -> f64 {
        self.app + self.driver + self.system + self.stdlib + self.wrapper
    }
}

/// Per-pool probability that a frame loses its symbols, keeping only the
/// module name and a raw offset. Wrappers, throw helpers, and breadcrumbs
/// are always symbolized (their modules ship symbols).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StripRates {
    pub app: f64,
    pub driver: f64,
    pub system: f64,
    pub stdlib: f64,
}

impl Default for StripRates {
    fn default() -> Self {
        StripRates { app: 0.12, driver: 0.45, system: 0.05, stdlib: 0.05 }
    }
}

/// Generator configuration. Everything influencing output lives here, so a
/// `(config, seed)` pair pins the corpus byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Number of records to generate.
    pub record_count: usize,
    /// Master seed; each record derives its own stream from it.
    pub seed: u64,
    /// Application catalog; records are spread uniformly across apps.
    pub apps: Vec<AppSpec>,
    /// Problem-class mixture; weights must sum to 1.
    pub class_mix: Vec<(String, f64)>,
    /// Pool mixture for filler frames below the blame; sums to 1.
    pub filler_mix: PoolMix,
    /// Median of the log-normal depth distribution.
    pub depth_median: f64,
    /// Shape parameter of the log-normal depth distribution.
    pub depth_sigma: f64,
    /// Hard cap on stack depth.
    pub max_depth: usize,
    /// Probability that a general-rule record (other than NULL_POINTER_READ,
    /// which uses `npr_block_rate`) is blamed at frame 0.
    pub top_blame_rate: f64,
    /// Of records with a skip block, fraction whose block reaches roughly
    /// half the stack (deep blames).
    pub deep_blame_rate: f64,
    /// Probability that a general-rule blame lands on a driver frame.
    /// Never applies to NULL_POINTER_READ, whose rule skips drivers.
    pub driver_blame_rate: f64,
    /// Probability that a NULL_POINTER_READ record carries a driver-laced
    /// skip block above its blamed app frame — the configuration on which
    /// the two general blame rules disagree.
    pub npr_block_rate: f64,
    /// Probability that each slot of a NULL_POINTER_READ skip block is a
    /// driver frame (at least one always is).
    pub decoy_driver_rate: f64,
    /// Probability that a memory-class record carries breadcrumb frames.
    pub marker_rate: f64,
    /// Probability that a breadcrumb drop is a pair instead of a single
    /// crumb; pairs identify the class much more sharply.
    pub crumb_pair_rate: f64,
    /// Per-pool symbol stripping rates.
    pub strip_rates: StripRates,
    /// Probability that an app filler frame uses a crash-prone method.
    pub crash_filler_rate: f64,
    /// Probability that a driver filler frame uses a crash-entry method.
    pub driver_entry_filler_rate: f64,
    /// Probability that an app frame uses a secondary binary.
    pub secondary_binary_rate: f64,
    /// Reporting window in days; timestamps are uniform inside it.
    pub window_days: u64,
    /// Unix-seconds start of the reporting window.
    pub base_timestamp: i64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            record_count: 1000,
            seed: 7,
            apps: default_apps(),
            class_mix: vec![
                (CLASS_INVALID_POINTER_READ.into(), 0.30),
                (CLASS_NULL_POINTER_READ.into(), 0.23),
                (CLASS_HEAP_CORRUPTION.into(), 0.08),
                (CLASS_APPLICATION_FAULT.into(), 0.21),
                (CLASS_STACK_OVERFLOW.into(), 0.08),
                (CLASS_CPP_EXCEPTION.into(), 0.10),
            ],
            filler_mix: PoolMix { app: 0.35, driver: 0.10, system: 0.25, stdlib: 0.20, wrapper: 0.10 },
            // Raw log-normal median below 9: class-specific depth floors
            // (stack-overflow cycles, throw blocks) pull the realized corpus
            // median up to 9.
            depth_median: 8.3,
            depth_sigma: 1.0727,
            max_depth: 255,
            // Balanced against npr_block_rate so the corpus-wide top-frame
            // blame share lands near two thirds.
            top_blame_rate: 0.86,
            deep_blame_rate: 0.16,
            driver_blame_rate: 0.30,
            npr_block_rate: 0.45,
            decoy_driver_rate: 0.55,
            marker_rate: 0.92,
            crumb_pair_rate: 0.55,
            strip_rates: StripRates::default(),
            crash_filler_rate: 0.15,
            driver_entry_filler_rate: 0.20,
            secondary_binary_rate: 0.25,
            window_days: 14,
            base_timestamp: 1_690_000_000,
        }
    }
}

impl GeneratorConfig {
    /// Restricts the catalog to the named apps (for transfer scenarios).
    pub fn with_apps(mut self, names: &[&str]) -> Self {
        self.apps.retain(|a| names.contains(&a.name.as_str()));
        self
    }

    pub fn with_records(mut self, n: usize) -> Self {
        self.record_count = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.record_count == 0 {
            return Err(config_err("record_count must be at least 1"));
        }
        if self.apps.is_empty() {
            return Err(config_err("app catalog is empty"));
        }
        for app in &self.apps {
            if app.name.is_empty()
                || app.binaries.is_empty()
                || app.namespaces.is_empty()
                || app.methods.is_empty()
                || app.crash_methods.is_empty()
                || app.recursive_methods.len() < 4
            {
                return Err(config_err(format!(
                    "app '{}' needs a name, at least one binary, namespaces, methods, \
                     crash methods, and at least 4 recursive methods",
                    app.name
                )));
            }
        }
        let class_sum: f64 = self.class_mix.iter().map(|(_, w)| w).sum();
        if self.class_mix.iter().any(|(_, w)| *w < 0.0) || (class_sum - 1.0).abs() > 1e-6 {
            return Err(config_err(format!(
                "class mixture weights must be non-negative and sum to 1, got {class_sum}"
            )));
        }
        let mix = self.filler_mix;
        if [mix.app, mix.driver, mix.system, mix.stdlib, mix.wrapper].iter().any(|w| *w < 0.0)
            || (mix.sum() - 1.0).abs() > 1e-6
        {
            return Err(config_err(format!(
                "filler pool weights must be non-negative and sum to 1, got {}",
                mix.sum()
            )));
        }
        if !(self.depth_median >= 1.0) || !(self.depth_sigma > 0.0) {
            return Err(config_err("depth_median must be >= 1 and depth_sigma > 0"));
        }
        if self.max_depth == 0 || self.max_depth > crate::corpus::MAX_STACK_DEPTH {
            return Err(config_err(format!(
                "max_depth must be in 1..={}",
                crate::corpus::MAX_STACK_DEPTH
            )));
        }
        for (name, rate) in [
            ("top_blame_rate", self.top_blame_rate),
            ("deep_blame_rate", self.deep_blame_rate),
            ("driver_blame_rate", self.driver_blame_rate),
            ("npr_block_rate", self.npr_block_rate),
            ("decoy_driver_rate", self.decoy_driver_rate),
            ("marker_rate", self.marker_rate),
            ("crumb_pair_rate", self.crumb_pair_rate),
            ("crash_filler_rate", self.crash_filler_rate),
            ("driver_entry_filler_rate", self.driver_entry_filler_rate),
            ("secondary_binary_rate", self.secondary_binary_rate),
            ("strip_rates.app", self.strip_rates.app),
            ("strip_rates.driver", self.strip_rates.driver),
            ("strip_rates.system", self.strip_rates.system),
            ("strip_rates.stdlib", self.strip_rates.stdlib),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(config_err(format!("{name} must be in [0, 1], got {rate}")));
            }
        }
        if self.window_days == 0 {
            return Err(config_err("window_days must be at least 1"));
        }
        Ok(())
    }
}

/// Default four-app catalog used by examples and tests.
pub fn default_apps() -> Vec<AppSpec> {
    vec![
        AppSpec {
            name: "aurora".into(),
            binaries: vec!["aurora.dll".into(), "aurora_child.dll".into()],
            helper_binary: "aurora_elf.dll".into(),
            namespaces: vec![
                "gfx::SurfaceQueue".into(),
                "gfx::TileCache".into(),
                "ui::TabStrip".into(),
                "net::SocketPump".into(),
                "dom::NodeTree".into(),
            ],
            methods: vec![
                "PaintLayer".into(),
                "LayoutSubtree".into(),
                "ParseHeaderLine".into(),
                "UpdateCursorState".into(),
                "ScheduleRepaint".into(),
                "DispatchInputEvent".into(),
                "CommitNavigation".into(),
                "DecodeImageChunk".into(),
            ],
            crash_methods: vec![
                "CopyPixelBuffer".into(),
                "ReleaseStaleMemory".into(),
                "GrowHeapArena".into(),
                "WriteBackBuffer".into(),
                "DetachRawPointer".into(),
                "MapSharedMemory".into(),
                "CloneFrameBuffer".into(),
            ],
            recursive_methods: vec![
                "VisitLayoutChildren".into(),
                "FlattenSubtree".into(),
                "ResolveStyleCascade".into(),
                "WalkDomBranch".into(),
            ],
        },
        AppSpec {
            name: "ledger".into(),
            binaries: vec!["ledger.dll".into(), "ledger_calc.dll".into()],
            helper_binary: "ledger_elf.dll".into(),
            namespaces: vec![
                "calc::CellGraph".into(),
                "calc::Formula".into(),
                "io::SheetReader".into(),
                "ui::GridView".into(),
                "fmt::NumberFmt".into(),
            ],
            methods: vec![
                "RecalcRegion".into(),
                "ParseFormulaText".into(),
                "RenderGridRow".into(),
                "ApplyCellStyle".into(),
                "SortRangeRows".into(),
                "AutoFitColumns".into(),
            ],
            crash_methods: vec![
                "CopyCellBuffer".into(),
                "ReallocRowMemory".into(),
                "GrowUndoHeap".into(),
                "SwapPointerTables".into(),
                "MapWorkbookMemory".into(),
                "CompactArenaBuffer".into(),
            ],
            recursive_methods: vec![
                "EvaluateCellTree".into(),
                "ExpandNamedRange".into(),
                "TraceDependents".into(),
                "FoldFormulaNode".into(),
            ],
        },
        AppSpec {
            name: "quill".into(),
            binaries: vec!["quill.dll".into(), "quill_text.dll".into()],
            helper_binary: "quill_elf.dll".into(),
            namespaces: vec![
                "text::RunLayout".into(),
                "text::GlyphCache".into(),
                "doc::RevisionLog".into(),
                "ui::Ribbon".into(),
                "spell::Checker".into(),
            ],
            methods: vec![
                "ShapeGlyphRun".into(),
                "JustifyParagraph".into(),
                "TrackRevision".into(),
                "HyphenateWord".into(),
                "PaginateSection".into(),
                "RenderRuler".into(),
            ],
            crash_methods: vec![
                "CopyGlyphBuffer".into(),
                "FreeRunMemory".into(),
                "GrowPieceTable".into(),
                "RebindStylePointer".into(),
                "AllocScratchBuffer".into(),
                "MapFontMemory".into(),
            ],
            recursive_methods: vec![
                "WalkOutlineNodes".into(),
                "ResolveStyleChain".into(),
                "MeasureNestedTables".into(),
                "VisitFieldCodes".into(),
            ],
        },
        AppSpec {
            name: "postbox".into(),
            binaries: vec!["postbox.dll".into(), "postbox_sync.dll".into()],
            helper_binary: "postbox_elf.dll".into(),
            namespaces: vec![
                "mime::Parser".into(),
                "sync::Mailbox".into(),
                "store::MsgIndex".into(),
                "ui::ThreadPane".into(),
                "net::ImapSession".into(),
            ],
            methods: vec![
                "ParseMimePart".into(),
                "SyncFolderDelta".into(),
                "IndexMessageBody".into(),
                "RenderThreadRow".into(),
                "QueueSendJob".into(),
                "DecodeHeaderText".into(),
            ],
            crash_methods: vec![
                "CopyAttachmentBuffer".into(),
                "ReleaseMessageMemory".into(),
                "GrowIndexHeap".into(),
                "AdvanceCursorPointer".into(),
                "MapStoreMemory".into(),
                "ReclaimCacheBuffers".into(),
            ],
            recursive_methods: vec![
                "WalkThreadTree".into(),
                "FlattenQuoteLevels".into(),
                "ResolveReferenceChain".into(),
                "VisitFolderNodes".into(),
            ],
        },
    ]
}

// OS / runtime frame pools shared by every app. The tuples are
// (binary, namespace, method).
const SYSTEM_FRAMES: &[(&str, &str, &str)] = &[
    ("ntdll.dll", "", "RtlUserThreadStart"),
    ("ntdll.dll", "", "KiUserCallbackDispatcher"),
    ("ntdll.dll", "", "RtlDispatchApc"),
    ("kernel32.dll", "", "BaseThreadInitThunk"),
    ("kernel32.dll", "", "QueueUserApcThunk"),
    ("kernelbase.dll", "", "WaitForSingleObjectEx"),
    ("kernelbase.dll", "", "SleepConditionVariableCS"),
    ("user32.dll", "", "DispatchMessageWorker"),
    ("user32.dll", "", "CallWindowProcInternal"),
    ("win32u.dll", "", "NtUserPeekMessage"),
    ("dxgi.dll", "CDXGISwapChain", "PresentImplCore"),
    ("d3d11.dll", "NDXGI::CDevice", "RotateResourceIdentities"),
];

const STDLIB_FRAMES: &[(&str, &str, &str)] = &[
    ("msvcp140.dll", "std::basic_string", "append"),
    ("msvcp140.dll", "std::basic_string", "assign"),
    ("msvcp140.dll", "std::vector", "emplace_back"),
    ("msvcp140.dll", "std::vector", "resize"),
    ("msvcp140.dll", "std::map", "insert_node"),
    ("msvcp140.dll", "std::shared_ptr", "reset"),
    ("ucrtbase.dll", "std", "invoke_thread_proc"),
    ("ucrtbase.dll", "std", "crt_thread_main"),
];

// Wrapper frames: (namespace, method). The binary is the app's helper module
// or its primary module, mirroring telemetry shims that live in both.
const WRAPPER_FRAMES: &[(&str, &str)] = &[
    ("diag::CrashReporter", "DumpWithoutCrashing"),
    ("diag::CrashReporter", "CaptureStackTrace"),
    ("diag::Logger", "LogMessage"),
    ("diag::Logger", "LogAssertFailure"),
    ("diag::Logger", "TraceEvent"),
    ("base::debug", "DumpWithoutCrashing"),
    ("base::debug", "CollectStackTrace"),
];

const THROW_FRAMES: &[(&str, &str, &str)] = &[
    ("vcruntime140.dll", "", "CxxThrowException"),
    ("vcruntime140.dll", "exc", "RethrowNestedException"),
    ("kernelbase.dll", "", "RaiseException"),
    ("ntdll.dll", "", "RtlRaiseException"),
];

const DRIVER_BINARIES: &[&str] =
    &["igd10iumd64.dll", "nvwgf2umx.dll", "atidxx64.dll", "rtkvhd64.sys"];

const DRIVER_ENTRY_METHODS: &[&str] = &[
    "OpenAdapter10_2",
    "SubmitCommandBuffer",
    "MapGpuAperture",
    "FlushPagingBuffer",
    "PresentBlitSurface",
];

const DRIVER_SUPPORT_METHODS: &[&str] = &[
    "QueryAdapterCaps",
    "NotifyFenceComplete",
    "GetDeviceState",
    "TranslateDisplayMode",
];

// Fault-path breadcrumbs planted below memory-class blames. Every memory
// class draws from this one pool; only the weights differ (see
// `crumb_weights`), so a crumb hints at the class without naming it. They
// live on ntdll so they are skippable system frames.
const CRUMB_FRAMES: &[(&str, &str, &str)] = &[
    ("ntdll.dll", "", "RtlpAccessProbeRead"),
    ("ntdll.dll", "", "RtlpNullPageCheck"),
    ("ntdll.dll", "", "RtlpHeapValidateBlock"),
    ("ntdll.dll", "", "KiUserExceptionDispatcher"),
];

/// Crumb-pool weights for a memory class: each tilts toward "its" probe
/// frame but leaks onto the others, and the exception dispatcher is common
/// noise. A single crumb is suggestive; a pair is near-conclusive.
fn crumb_weights(class: &str) -> Option<[f64; 4]> {
    match class {
        CLASS_INVALID_POINTER_READ => Some([0.62, 0.08, 0.05, 0.25]),
        CLASS_NULL_POINTER_READ => Some([0.08, 0.62, 0.05, 0.25]),
        CLASS_HEAP_CORRUPTION => Some([0.06, 0.05, 0.64, 0.25]),
        _ => None,
    }
}

const MARKER_STACK_PROBE: &[(&str, &str, &str)] =
    &[("ntdll.dll", "", "RtlpStackLimitProbe"), ("ntdll.dll", "", "RtlpExpandUserStack")];

/// Frame pools used by the construction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FramePool {
    App,
    Driver,
    System,
    Stdlib,
    Wrapper,
    Throw,
}

/// Generates `config.record_count` records. Deterministic in the config.
pub fn generate(config: &GeneratorConfig) -> Result<Corpus> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.record_count);
    for index in 0..config.record_count {
        records.push(generate_record(config, index)?);
    }
    Ok(Corpus::new(records))
}

/// Generates the record at `index` under `config`. Records are independent:
/// each draws from a ChaCha stream keyed by `(seed, index)`.
pub fn generate_record(config: &GeneratorConfig, index: usize) -> Result<CrashRecord> {
    let mut key = Fnv1a::new();
    key.update_u64(config.seed);
    key.update_u64(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key.finish());

    let timestamp = config.base_timestamp
        + rng.random_range(0..config.window_days as i64 * 86_400);
    let app = &config.apps[rng.random_range(0..config.apps.len())];
    let class = pick_weighted(&mut rng, &config.class_mix).clone();

    let mut ctx = RecordContext::new(config, app, &mut rng);
    let (stack, blame) = match class.as_str() {
        CLASS_STACK_OVERFLOW => build_stack_overflow(&mut ctx),
        CLASS_CPP_EXCEPTION => build_cpp_exception(&mut ctx),
        _ => build_general(&mut ctx, &class),
    };
    CrashRecord::new(stack, Some(blame), &class, &app.name, timestamp)
}

/// Per-record frame factory. Binaries are chosen once per record so a stack
/// involves a small, coherent set of modules (one driver, one stdlib DLL,
/// a couple of OS modules), keeping the distinct-binary count realistic.
struct RecordContext<'a> {
    config: &'a GeneratorConfig,
    app: &'a AppSpec,
    rng: &'a mut ChaCha8Rng,
    system_alt: &'static str,
    stdlib_bin: &'static str,
    driver_bin: &'static str,
}

impl<'a> RecordContext<'a> {
    fn new(config: &'a GeneratorConfig, app: &'a AppSpec, rng: &'a mut ChaCha8Rng) -> Self {
        let alts: Vec<&'static str> = SYSTEM_FRAMES
            .iter()
            .map(|(b, _, _)| *b)
            .filter(|b| *b != "ntdll.dll")
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let system_alt = alts[rng.random_range(0..alts.len())];
        let stdlib_bins = ["msvcp140.dll", "ucrtbase.dll"];
        let stdlib_bin = stdlib_bins[rng.random_range(0..stdlib_bins.len())];
        let driver_bin = DRIVER_BINARIES[rng.random_range(0..DRIVER_BINARIES.len())];
        RecordContext { config, app, rng, system_alt, stdlib_bin, driver_bin }
    }

    fn offset(&mut self) -> Option<u64> {
        if self.rng.random_bool(0.3) {
            Some(self.rng.random_range(0x10..0x4000))
        } else {
            None
        }
    }

    /// Replaces the frame's symbols with `unknown` plus a raw module offset
    /// with probability `rate`, as unsymbolized telemetry reports them.
    fn maybe_strip(&mut self, frame: Frame, rate: f64) -> Frame {
        if rate > 0.0 && self.rng.random_bool(rate) {
            let off = self.rng.random_range(0x1_000..0x80_000);
            Frame::from_parts(&frame.binary, "", "unknown", Some(off))
        } else {
            frame
        }
    }

    fn app_binary(&mut self) -> &'a str {
        let bins = &self.app.binaries;
        if bins.len() > 1 && self.rng.random_bool(self.config.secondary_binary_rate) {
            &bins[self.rng.random_range(1..bins.len())]
        } else {
            &bins[0]
        }
    }

    fn app_frame(&mut self, crash_prone: bool) -> Frame {
        let binary = self.app_binary().to_string();
        let ns = &self.app.namespaces[self.rng.random_range(0..self.app.namespaces.len())];
        let pool = if crash_prone { &self.app.crash_methods } else { &self.app.methods };
        let method = &pool[self.rng.random_range(0..pool.len())];
        let off = self.offset();
        let frame = Frame::from_parts(&binary, ns, method, off);
        let rate = self.config.strip_rates.app;
        self.maybe_strip(frame, rate)
    }

    fn driver_frame(&mut self, entry: bool) -> Frame {
        let pool = if entry { DRIVER_ENTRY_METHODS } else { DRIVER_SUPPORT_METHODS };
        let method = pool[self.rng.random_range(0..pool.len())];
        let off = self.offset();
        let frame = Frame::from_parts(self.driver_bin, "", method, off);
        let rate = self.config.strip_rates.driver;
        self.maybe_strip(frame, rate)
    }

    fn system_frame(&mut self) -> Frame {
        let candidates: Vec<&(&str, &str, &str)> = SYSTEM_FRAMES
            .iter()
            .filter(|(b, _, _)| *b == "ntdll.dll" || *b == self.system_alt)
            .collect();
        let (b, ns, m) = candidates[self.rng.random_range(0..candidates.len())];
        let off = self.offset();
        let frame = Frame::from_parts(b, ns, m, off);
        let rate = self.config.strip_rates.system;
        self.maybe_strip(frame, rate)
    }

    fn stdlib_frame(&mut self) -> Frame {
        let candidates: Vec<&(&str, &str, &str)> =
            STDLIB_FRAMES.iter().filter(|(b, _, _)| *b == self.stdlib_bin).collect();
        let (b, ns, m) = candidates[self.rng.random_range(0..candidates.len())];
        let off = self.offset();
        let frame = Frame::from_parts(b, ns, m, off);
        let rate = self.config.strip_rates.stdlib;
        self.maybe_strip(frame, rate)
    }

    fn wrapper_frame(&mut self) -> Frame {
        let (ns, m) = WRAPPER_FRAMES[self.rng.random_range(0..WRAPPER_FRAMES.len())];
        let binary = if self.rng.random_bool(0.5) {
            self.app.helper_binary.clone()
        } else {
            self.app.binaries[0].clone()
        };
        let off = self.offset();
        Frame::from_parts(&binary, ns, m, off)
    }

    fn throw_frame(&mut self, slot: usize) -> Frame {
        // Cycle through the pool starting at a random point so multi-frame
        // blocks never repeat a helper.
        let start = self.rng.random_range(0..THROW_FRAMES.len());
        let (b, ns, m) = THROW_FRAMES[(start + slot) % THROW_FRAMES.len()];
        Frame::from_parts(b, ns, m, None)
    }

    fn crumb_frame(&mut self, weights: &[f64; 4]) -> Frame {
        let pairs: Vec<((&str, &str, &str), f64)> =
            CRUMB_FRAMES.iter().copied().zip(weights.iter().copied()).collect();
        let (b, ns, m) = *pick_weighted(self.rng, &pairs);
        Frame::from_parts(b, ns, m, None)
    }

    fn filler_frame(&mut self) -> Frame {
        let mix = self.config.filler_mix;
        let pools = [
            (FramePool::App, mix.app),
            (FramePool::Driver, mix.driver),
            (FramePool::System, mix.system),
            (FramePool::Stdlib, mix.stdlib),
            (FramePool::Wrapper, mix.wrapper),
        ];
        match *pick_weighted(self.rng, &pools) {
            FramePool::App => {
                let crash = self.rng.random_bool(self.config.crash_filler_rate);
                self.app_frame(crash)
            }
            FramePool::Driver => {
                let entry = self.rng.random_bool(self.config.driver_entry_filler_rate);
                self.driver_frame(entry)
            }
            FramePool::System => self.system_frame(),
            FramePool::Stdlib => self.stdlib_frame(),
            FramePool::Wrapper => self.wrapper_frame(),
            FramePool::Throw => unreachable!("throw pool is never a filler"),
        }
    }

    fn block_frame(&mut self) -> Frame {
        let pools = [
            (FramePool::Wrapper, 0.5),
            (FramePool::System, 0.3),
            (FramePool::Stdlib, 0.2),
        ];
        match *pick_weighted(self.rng, &pools) {
            FramePool::Wrapper => self.wrapper_frame(),
            FramePool::System => self.system_frame(),
            _ => self.stdlib_frame(),
        }
    }

    fn sample_depth(&mut self) -> usize {
        let z = standard_normal(self.rng);
        let d = (self.config.depth_median.ln() + self.config.depth_sigma * z).exp();
        (d.round() as i64).clamp(1, self.config.max_depth as i64) as usize
    }
}

/// General pattern (memory classes and APPLICATION_FAULT): an optional skip
/// block, the blamed frame, then mixed fillers; memory classes drop
/// breadcrumbs below. NULL_POINTER_READ differs twice: its skip block may
/// contain driver frames (which its rule skips), and its blame is always an
/// app frame.
fn build_general(ctx: &mut RecordContext, class: &str) -> (Vec<Frame>, usize) {
    let depth = ctx.sample_depth();
    let cfg = ctx.config;
    let npr = class == CLASS_NULL_POINTER_READ;

    let blocked = if npr {
        ctx.rng.random_bool(cfg.npr_block_rate)
    } else {
        !ctx.rng.random_bool(cfg.top_blame_rate)
    };
    let block_len = if !blocked || depth == 1 {
        0
    } else if ctx.rng.random_bool(cfg.deep_blame_rate) {
        let extra = if depth >= 4 { ctx.rng.random_range(0..=depth / 4) } else { 0 };
        (depth / 2 + extra).clamp(1, depth - 1)
    } else {
        ctx.rng.random_range(1..=4.min(depth - 1))
    };

    let mut stack = Vec::with_capacity(depth);
    let mut decoys = 0;
    for _ in 0..block_len {
        if npr && ctx.rng.random_bool(cfg.decoy_driver_rate) {
            stack.push(ctx.driver_frame(true));
            decoys += 1;
        } else {
            stack.push(ctx.block_frame());
        }
    }
    // A blocked NPR record must actually show the conflict shape.
    if npr && block_len > 0 && decoys == 0 {
        let slot = ctx.rng.random_range(0..block_len);
        stack[slot] = ctx.driver_frame(true);
    }

    let blame = block_len;
    let memory_class = class != CLASS_APPLICATION_FAULT;
    if !npr && ctx.rng.random_bool(cfg.driver_blame_rate) {
        stack.push(ctx.driver_frame(true));
    } else {
        stack.push(ctx.app_frame(memory_class));
    }

    for _ in blame + 1..depth {
        stack.push(ctx.filler_frame());
    }

    // Swap fillers below the blame for breadcrumbs, biased toward the
    // bottom half of the filler region: the cue that disambiguates the top
    // of the stack sits far from it.
    if memory_class && depth > blame + 1 && ctx.rng.random_bool(cfg.marker_rate) {
        if let Some(weights) = crumb_weights(class) {
            let region = blame + 1 + (depth - blame - 1) / 2..depth;
            let crumbs = if ctx.rng.random_bool(cfg.crumb_pair_rate) { 2 } else { 1 };
            for _ in 0..crumbs.min(region.len()) {
                let slot = ctx.rng.random_range(region.clone());
                stack[slot] = ctx.crumb_frame(&weights);
            }
        }
    }

    (stack, blame)
}

/// Stack overflow: optional leaf frames (stack probes or a final
/// non-recursive app call), a call cycle repeated at least three times, and
/// a two-frame entry tail. The blame is the top of the cycle.
fn build_stack_overflow(ctx: &mut RecordContext) -> (Vec<Frame>, usize) {
    let cycle_len = ctx.rng.random_range(2..=4);
    let leads_n = *pick_weighted(ctx.rng, &[(0usize, 0.35), (1, 0.35), (2, 0.30)]);
    let min_depth = leads_n + 3 * cycle_len + 2;
    let depth = ctx.sample_depth().max(min_depth).min(ctx.config.max_depth);
    let repeats = (depth - leads_n - 2) / cycle_len;

    let mut stack = Vec::with_capacity(leads_n + repeats * cycle_len + 2);
    for _ in 0..leads_n {
        if ctx.rng.random_bool(0.5) {
            let (b, ns, m) = MARKER_STACK_PROBE[ctx.rng.random_range(0..MARKER_STACK_PROBE.len())];
            stack.push(Frame::from_parts(b, ns, m, None));
        } else {
            stack.push(ctx.app_frame(false));
        }
    }

    // Build one cycle iteration, then repeat it verbatim so the repetition
    // is literal in the frame text (stripped frames repeat too — the same
    // call site reports the same raw offset every iteration).
    let ns = ctx.app.namespaces[ctx.rng.random_range(0..ctx.app.namespaces.len())].clone();
    let binary = ctx.app.binaries[0].clone();
    let picks = rand::seq::index::sample(ctx.rng, ctx.app.recursive_methods.len(), cycle_len);
    let mut cycle = Vec::with_capacity(cycle_len);
    for i in picks.iter() {
        let off = ctx.offset();
        let frame = Frame::from_parts(&binary, &ns, &ctx.app.recursive_methods[i], off);
        let rate = ctx.config.strip_rates.app;
        cycle.push(ctx.maybe_strip(frame, rate));
    }
    let blame = stack.len();
    for _ in 0..repeats {
        stack.extend(cycle.iter().cloned());
    }

    stack.push(ctx.app_frame(false));
    stack.push(Frame::from_parts("ntdll.dll", "", "RtlUserThreadStart", None));
    (stack, blame)
}

/// C++ exception: one to three throw helpers on top; the frame directly
/// below them is blamed no matter which pool it comes from.
fn build_cpp_exception(ctx: &mut RecordContext) -> (Vec<Frame>, usize) {
    let block_len = ctx.rng.random_range(1..=3);
    let depth = ctx.sample_depth().max(block_len + 1);

    let mut stack = Vec::with_capacity(depth);
    for slot in 0..block_len {
        stack.push(ctx.throw_frame(slot));
    }

    let pools = [
        (FramePool::App, 0.35),
        (FramePool::Driver, 0.15),
        (FramePool::Stdlib, 0.30),
        (FramePool::System, 0.20),
    ];
    let blamed = match *pick_weighted(ctx.rng, &pools) {
        FramePool::App => ctx.app_frame(true),
        FramePool::Driver => ctx.driver_frame(true),
        FramePool::Stdlib => ctx.stdlib_frame(),
        _ => ctx.system_frame(),
    };
    stack.push(blamed);

    for _ in block_len + 1..depth {
        stack.push(ctx.filler_frame());
    }
    (stack, block_len)
}

/// Classifies a generated frame into its construction pool. Wrapper
/// namespaces win over binaries because telemetry shims also live in app
/// modules; throw helpers are matched by (binary, method) pairs.
pub fn classify_frame(config: &GeneratorConfig, frame: &Frame) -> FramePool {
    if THROW_FRAMES.iter().any(|(b, _, m)| *b == frame.binary && *m == frame.method) {
        return FramePool::Throw;
    }
    if WRAPPER_FRAMES.iter().any(|(ns, _)| *ns == frame.namespace)
        || config.apps.iter().any(|a| a.helper_binary == frame.binary)
    {
        return FramePool::Wrapper;
    }
    if DRIVER_BINARIES.contains(&frame.binary.as_str()) {
        return FramePool::Driver;
    }
    if config.apps.iter().any(|a| a.binaries.contains(&frame.binary)) {
        return FramePool::App;
    }
    if STDLIB_FRAMES.iter().any(|(b, _, _)| *b == frame.binary) {
        return FramePool::Stdlib;
    }
    FramePool::System
}

/// Reference implementation of the planted blame rule, recomputed from the
/// stack and problem class. Used by tests to prove labels are consistent
/// with stacks.
pub fn rule_blame(config: &GeneratorConfig, record: &CrashRecord) -> Option<usize> {
    let frames = &record.stack;
    match record.problem_class.as_str() {
        CLASS_STACK_OVERFLOW => find_cycle_start(frames),
        CLASS_CPP_EXCEPTION => frames
            .iter()
            .position(|f| classify_frame(config, f) != FramePool::Throw),
        CLASS_NULL_POINTER_READ => frames
            .iter()
            .position(|f| classify_frame(config, f) == FramePool::App),
        _ => frames.iter().position(|f| {
            matches!(classify_frame(config, f), FramePool::App | FramePool::Driver)
        }),
    }
}

/// Finds the start of the first frame subsequence repeated at least three
/// times back to back, scanning positions outward and lengths upward.
pub fn find_cycle_start(frames: &[Frame]) -> Option<usize> {
    let n = frames.len();
    for start in 0..n {
        for len in 1..=(n - start) / 3 {
            let window = &frames[start..start + len];
            let second = &frames[start + len..start + 2 * len];
            let third = &frames[start + 2 * len..start + 3 * len];
            if window == second && window == third {
                return Some(start);
            }
        }
    }
    None
}

/// Weighted choice over `(item, weight)` pairs; weights need not sum to 1.
fn pick_weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut draw = rng.random::<f64>() * total;
    for (item, w) in items {
        draw -= w;
        if draw <= 0.0 {
            return item;
        }
    }
    &items.last().expect("weighted choice over empty slice").0
}

/// Standard normal via Box–Muller, so depth sampling needs no extra crates.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
