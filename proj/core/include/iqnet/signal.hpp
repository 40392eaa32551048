#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iqnet/rng.hpp"
#include "iqnet/tensor.hpp"

namespace iqnet {

enum class Modulation : std::uint8_t {
  kBPSK,
  kQPSK,
  k8PSK,
  kPAM4,
  kQAM16,
  kQAM64,
  kCPFSK,
  kGFSK,
  kAMDSB,
  kAMSSB,
  kWBFM,
};

inline constexpr Modulation kDigitalModulations[] = {
    Modulation::kBPSK,  Modulation::kQPSK,  Modulation::k8PSK, Modulation::kPAM4,
    Modulation::kQAM16, Modulation::kQAM64, Modulation::kCPFSK, Modulation::kGFSK,
};

inline constexpr Modulation kAllModulations[] = {
    Modulation::kBPSK,  Modulation::kQPSK,  Modulation::k8PSK, Modulation::kPAM4,
    Modulation::kQAM16, Modulation::kQAM64, Modulation::kCPFSK, Modulation::kGFSK,
    Modulation::kAMDSB, Modulation::kAMSSB, Modulation::kWBFM,
};

std::string_view modulation_name(Modulation m);
std::optional<Modulation> modulation_from_name(std::string_view name);
bool is_analog(Modulation m);

/// Alphabet size of a digital scheme (symbols are integers in [0, M)).
std::size_t alphabet_size(Modulation m);

/// Unit-average-power constellation indexed by symbol value (Gray mapped).
/// Only defined for the linear schemes (PSK, PAM, QAM).
std::vector<std::complex<double>> constellation(Modulation m);

struct ModulatorParams {
  std::size_t sps = 8;          // samples per symbol
  double rolloff = 0.35;        // RRC excess bandwidth
  std::size_t span = 8;         // RRC length in symbols
  double fsk_index = 0.5;       // CPFSK/GFSK modulation index
  double gfsk_bt = 0.35;        // Gaussian filter bandwidth-time product
  std::size_t gfsk_span = 4;    // Gaussian filter length in symbols
};

/// Root-raised-cosine taps (span*sps + 1 of them), scaled so sum(h^2) == sps.
/// The truncated pulse is nudged (minimum-norm correction) so that its
/// autocorrelation is zero at every nonzero multiple of sps: transmit filter
/// followed by matched filter is free of inter-symbol interference.
std::vector<double> rrc_taps(double rolloff, std::size_t span, std::size_t sps);

/// Complex baseband [2, symbols.size() * sps] with unit mean power over the
/// steady-state region (the first and last span*sps samples excluded).
///
/// Linear schemes map symbols onto `constellation` and apply RRC shaping;
/// CPFSK/GFSK integrate (Gaussian filtered, for GFSK) frequency pulses into
/// phase. Analog schemes ignore the symbol values and modulate a band-limited
/// noise message drawn from `rng`, one message sample per output sample.
Tensor<double> modulate(Modulation scheme, std::span<const int> symbols,
                        const ModulatorParams& params, Rng& rng);

struct ChannelParams {
  double cfo = 0.0;                // cycles per sample, |cfo| < 0.5
  double phase0 = 0.0;             // radians
  double clock_rate_ppm = 0.0;     // sample clock rate error
  double clock_offset_frac = 0.0;  // fractional timing offset in [0, 1)

  void validate() const;
};

/// Resamples by (1 + ppm*1e-6) with fractional delay `clock_offset_frac`
/// (windowed-sinc interpolation), then rotates sample n by
/// exp(j(2*pi*cfo*n + phase0)).
Tensor<double> impair(const Tensor<double>& signal, const ChannelParams& p);

/// Adds circular complex Gaussian noise with per-sample variance
/// P / 10^(snr/10), P being the measured mean |s|^2 of `signal`.
/// snr_db = +infinity returns the signal unchanged.
Tensor<double> add_awgn(const Tensor<double>& signal, double snr_db, Rng& rng);

/// Mean |s|^2 of a [2, L] complex signal.
double mean_power(const Tensor<double>& signal);

struct ImpairmentRanges {
  bool enabled = true;
  double max_cfo = 0.01;        // uniform in [-max, max]
  double max_clock_ppm = 50.0;  // uniform in [-max, max]
};

inline constexpr std::size_t kFrameLength = 128;

struct DatasetConfig {
  std::vector<Modulation> modulations;
  std::vector<int> snrs_db;
  std::size_t frames_per_pair = 1000;
  ModulatorParams modulator;
  ImpairmentRanges impairments;
  std::uint64_t seed = 0;

  /// 11 schemes x SNR -20..18 dB step 2 x 1000 frames.
  static DatasetConfig full();

  void validate() const;
  std::uint64_t hash() const;
};

struct IQFrame {
  std::array<float, 2 * kFrameLength> samples{};  // I row then Q row
  std::uint8_t label = 0;
  std::int8_t snr_db = 0;

  friend bool operator==(const IQFrame&, const IQFrame&) = default;
};

struct IQDataset {
  std::vector<std::string> class_names;
  std::vector<IQFrame> frames;
  std::uint64_t provenance = 0;  // config hash when generated, CRC when loaded

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

/// One frame of class `mod_index` at `snr_db`; a pure function of
/// (cfg.seed, modulation, snr, index), so generation order never matters.
IQFrame generate_frame(const DatasetConfig& cfg, std::size_t mod_index, int snr_db,
                       std::size_t index);

/// The 64-bit crop behind a frame, before and after noise. `generate_frame`
/// rounds `noisy` to 32-bit; calibration checks compare the two.
struct FrameParts {
  Tensor<double> clean;
  Tensor<double> noisy;
};
FrameParts generate_frame_parts(const DatasetConfig& cfg, std::size_t mod_index, int snr_db, std::size_t index);

IQDataset generate_dataset(const DatasetConfig& cfg);

/// Global uniform shuffle, then split at floor(ratio * N).
std::pair<IQDataset, IQDataset> split_shuffle(const IQDataset& ds, double ratio, std::uint64_t seed);

/// File layout (little-endian): "CXIQ", u16 version, u16 num_classes,
/// class names (u16 length + UTF-8), u32 frame count, per frame u8 label,
/// i8 snr_db, 256 x f32 (I row then Q row), CRC32 of all preceding bytes.
/// Returns the CRC32 trailer that was written.
std::uint32_t save_dataset(const IQDataset& ds, const std::filesystem::path& path);
IQDataset load_dataset(const std::filesystem::path& path);

/// Human-readable description of the dataset file layout.
std::string dataset_format_description();

/// Stacks frames into a model batch [B, 1, 2, 128].
template <typename T>
Tensor<T> make_batch(const IQDataset& ds, std::span<const std::size_t> indices);

}  // namespace iqnet
