#include "iqnet/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "binary_io.hpp"

namespace iqnet {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t inverse_gray(std::size_t g) {
  std::size_t n = g;
  while (g >>= 1) n ^= g;
  return n;
}

/// Gray-coded PAM level for `bits` bits: 2p - (2^bits - 1), unnormalized.
double pam_level(std::size_t symbol, std::size_t levels) {
  return 2.0 * static_cast<double>(inverse_gray(symbol)) - static_cast<double>(levels - 1);
}

std::complex<double> at(const Tensor<double>& s, std::size_t n) {
  const std::size_t len = s.extent(1);
  return {s[n], s[len + n]};
}

void set(Tensor<double>& s, std::size_t n, std::complex<double> v) {
  const std::size_t len = s.extent(1);
  s[n] = v.real();
  s[len + n] = v.imag();
}

void require_signal(const Tensor<double>& s, const char* who) {
  if (s.rank() != 2 || s.extent(0) != 2) {
    throw DimensionError(std::string(who) + ": expected complex signal [2,L], got " +
                         shape_string(s.shape()));
  }
}

/// Linear-phase FIR applied with its group delay removed ("same" output).
std::vector<double> filter_same(std::span<const double> x, std::span<const double> taps) {
  const std::size_t delay = taps.size() / 2;
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const auto idx = static_cast<std::ptrdiff_t>(n + delay) - static_cast<std::ptrdiff_t>(k);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) acc += taps[k] * x[static_cast<std::size_t>(idx)];
    }
    y[n] = acc;
  }
  return y;
}

std::vector<double> lowpass_taps(double cutoff, std::size_t half) {
  std::vector<double> h(2 * half + 1);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(half);
    const double sinc = d == 0 ? 2 * cutoff : std::sin(2 * kPi * cutoff * d) / (kPi * d);
    const double w = 0.54 + 0.46 * std::cos(kPi * d / static_cast<double>(half + 1));
    h[i] = sinc * w;
  }
  return h;
}

std::vector<double> hilbert_taps(std::size_t half) {
  std::vector<double> h(2 * half + 1, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto d = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half);
    if (d % 2 == 0) continue;
    const double w = 0.54 + 0.46 * std::cos(kPi * static_cast<double>(d) / static_cast<double>(half + 1));
    h[i] = 2.0 / (kPi * static_cast<double>(d)) * w;
  }
  return h;
}

/// Unit-RMS band-limited Gaussian noise, the stand-in for a voice message.
std::vector<double> analog_message(std::size_t len, std::size_t sps, Rng& rng) {
  const auto taps = lowpass_taps(0.5 / static_cast<double>(sps), 32);
  std::vector<double> white(len + taps.size());
  for (auto& v : white) v = rng.normal();
  auto msg = filter_same(white, taps);
  msg.erase(msg.begin(), msg.begin() + static_cast<std::ptrdiff_t>(taps.size() / 2));
  msg.resize(len);
  double p = 0;
  for (double v : msg) p += v * v;
  const double scale = 1.0 / std::sqrt(p / static_cast<double>(len));
  for (auto& v : msg) v *= scale;
  return msg;
}

void normalize_power(Tensor<double>& s, std::size_t guard) {
  const std::size_t len = s.extent(1);
  std::size_t lo = guard;
  std::size_t hi = len > guard ? len - guard : 0;
  if (hi <= lo) {
    lo = 0;
    hi = len;
  }
  double p = 0;
  for (std::size_t n = lo; n < hi; ++n) p += std::norm(at(s, n));
  p /= static_cast<double>(hi - lo);
  if (!(p > 0)) throw NumericError("modulate: zero-power signal");
  const double scale = 1.0 / std::sqrt(p);
  for (auto& v : s.data()) v *= scale;
}

Tensor<double> fsk(std::span<const int> symbols, const ModulatorParams& prm, bool gaussian) {
  const std::size_t sps = prm.sps;
  const std::size_t len = symbols.size() * sps;
  std::vector<double> freq(len);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const double a = symbols[k] ? 1.0 : -1.0;
    for (std::size_t i = 0; i < sps; ++i) freq[k * sps + i] = a;
  }
  if (gaussian) {
    const std::size_t half = prm.gfsk_span * sps / 2;
    std::vector<double> g(2 * half + 1);
    const double sigma = std::sqrt(std::log(2.0)) / (2 * kPi * prm.gfsk_bt) * static_cast<double>(sps);
    double sum = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = static_cast<double>(i) - static_cast<double>(half);
      g[i] = std::exp(-t * t / (2 * sigma * sigma));
      sum += g[i];
    }
    for (auto& v : g) v /= sum;
    freq = filter_same(freq, g);
  }
  Tensor<double> out({2, len});
  double phase = 0;
  const double step = kPi * prm.fsk_index / static_cast<double>(sps);
  for (std::size_t n = 0; n < len; ++n) {
    phase += step * freq[n];
    set(out, n, std::polar(1.0, phase));
  }
  return out;
}

}  // namespace

std::string_view modulation_name(Modulation m) {
  switch (m) {
    case Modulation::kBPSK: return "BPSK";
    case Modulation::kQPSK: return "QPSK";
    case Modulation::k8PSK: return "8PSK";
    case Modulation::kPAM4: return "PAM4";
    case Modulation::kQAM16: return "QAM16";
    case Modulation::kQAM64: return "QAM64";
    case Modulation::kCPFSK: return "CPFSK";
    case Modulation::kGFSK: return "GFSK";
    case Modulation::kAMDSB: return "AM-DSB";
    case Modulation::kAMSSB: return "AM-SSB";
    case Modulation::kWBFM: return "WBFM";
  }
  return "unknown";
}

std::optional<Modulation> modulation_from_name(std::string_view name) {
  for (Modulation m : kAllModulations) {
    if (modulation_name(m) == name) return m;
  }
  return std::nullopt;
}

bool is_analog(Modulation m) {
  return m == Modulation::kAMDSB || m == Modulation::kAMSSB || m == Modulation::kWBFM;
}

std::size_t alphabet_size(Modulation m) {
  switch (m) {
    case Modulation::kBPSK: return 2;
    case Modulation::kQPSK: return 4;
    case Modulation::k8PSK: return 8;
    case Modulation::kPAM4: return 4;
    case Modulation::kQAM16: return 16;
    case Modulation::kQAM64: return 64;
    case Modulation::kCPFSK:
    case Modulation::kGFSK: return 2;
    default: return 1;
  }
}

std::vector<std::complex<double>> constellation(Modulation m) {
  std::vector<std::complex<double>> pts;
  switch (m) {
    case Modulation::kBPSK:
      pts = {{1.0, 0.0}, {-1.0, 0.0}};
      break;
    case Modulation::kQPSK: {
      const double r = 1.0 / std::sqrt(2.0);
      for (std::size_t s = 0; s < 4; ++s) pts.emplace_back(r * (1 - 2.0 * (s >> 1)), r * (1 - 2.0 * (s & 1)));
      break;
    }
    case Modulation::k8PSK:
      for (std::size_t s = 0; s < 8; ++s) pts.push_back(std::polar(1.0, 2 * kPi * static_cast<double>(inverse_gray(s)) / 8));
      break;
    case Modulation::kPAM4:
      for (std::size_t s = 0; s < 4; ++s) pts.emplace_back(pam_level(s, 4) / std::sqrt(5.0), 0.0);
      break;
    case Modulation::kQAM16:
      for (std::size_t s = 0; s < 16; ++s) {
        pts.emplace_back(pam_level(s >> 2, 4) / std::sqrt(10.0), pam_level(s & 3, 4) / std::sqrt(10.0));
      }
      break;
    case Modulation::kQAM64:
      for (std::size_t s = 0; s < 64; ++s) {
        pts.emplace_back(pam_level(s >> 3, 8) / std::sqrt(42.0), pam_level(s & 7, 8) / std::sqrt(42.0));
      }
      break;
    default:
      throw ConfigError("constellation: " + std::string(modulation_name(m)) + " is not a linear scheme");
  }
  return pts;
}

std::vector<double> rrc_taps(double rolloff, std::size_t span, std::size_t sps) {
  if (sps < 2) throw ConfigError("rrc_taps: sps must be at least 2");
  if (span < 2) throw ConfigError("rrc_taps: span must be at least 2 symbols");
  if (!(rolloff > 0 && rolloff <= 1)) throw ConfigError("rrc_taps: roll-off must lie in (0, 1]");
  const std::size_t n = span * sps + 1;
  const double b = rolloff;
  Eigen::VectorXd h(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(span * sps) / 2) / static_cast<double>(sps);
    double v;
    if (t == 0.0) {
      v = 1 - b + 4 * b / kPi;
    } else if (std::abs(std::abs(t) - 1 / (4 * b)) < 1e-12) {
      v = b / std::sqrt(2.0) *
          ((1 + 2 / kPi) * std::sin(kPi / (4 * b)) + (1 - 2 / kPi) * std::cos(kPi / (4 * b)));
    } else {
      v = (std::sin(kPi * t * (1 - b)) + 4 * b * t * std::cos(kPi * t * (1 + b))) /
          (kPi * t * (1 - (4 * b * t) * (4 * b * t)));
    }
    h[static_cast<Eigen::Index>(i)] = v;
  }

  // Truncation leaves percent-level ISI after the matched filter. Gauss-Newton
  // with minimum-norm steps moves the taps as little as possible until the
  // autocorrelation vanishes at every nonzero multiple of sps.
  const auto lags = static_cast<Eigen::Index>(span);
  const auto len = static_cast<Eigen::Index>(n);
  const auto step = static_cast<Eigen::Index>(sps);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::VectorXd r(lags);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(lags, len);
    for (Eigen::Index k = 0; k < lags; ++k) {
      const Eigen::Index d = (k + 1) * step;
      r[k] = h.head(len - d).dot(h.tail(len - d));
      for (Eigen::Index j = 0; j < len; ++j) {
        if (j + d < len) jac(k, j) += h[j + d];
        if (j >= d) jac(k, j) += h[j - d];
      }
    }
    if (r.cwiseAbs().maxCoeff() <= 1e-15 * h.squaredNorm()) break;
    const Eigen::MatrixXd gram = jac * jac.transpose();
    h -= jac.transpose() * gram.ldlt().solve(r);
  }

  const double scale = std::sqrt(static_cast<double>(sps) / h.squaredNorm());
  std::vector<double> taps(n);
  for (std::size_t i = 0; i < n; ++i) taps[i] = scale * h[static_cast<Eigen::Index>(i)];
  return taps;
}

Tensor<double> modulate(Modulation scheme, std::span<const int> symbols,
                        const ModulatorParams& prm, Rng& rng) {
  if (prm.sps < 2) throw ConfigError("modulate: sps must be at least 2");
  if (symbols.empty()) throw InputError("modulate: empty symbol stream");
  const std::size_t sps = prm.sps;
  const std::size_t len = symbols.size() * sps;
  const std::size_t guard = prm.span * sps;
  const std::size_t m = alphabet_size(scheme);
  if (!is_analog(scheme)) {
    for (int s : symbols) {
      if (s < 0 || static_cast<std::size_t>(s) >= m) {
        throw InputError("modulate: symbol " + std::to_string(s) + " outside alphabet of " +
                         std::string(modulation_name(scheme)));
      }
    }
  }

  Tensor<double> out({2, len});
  switch (scheme) {
    case Modulation::kCPFSK:
      return fsk(symbols, prm, false);
    case Modulation::kGFSK:
      return fsk(symbols, prm, true);
    case Modulation::kAMDSB: {
      const auto msg = analog_message(len, sps, rng);
      for (std::size_t n = 0; n < len; ++n) set(out, n, {1.0 + 0.5 * msg[n], 0.0});
      normalize_power(out, guard);
      return out;
    }
    case Modulation::kAMSSB: {
      const auto msg = analog_message(len, sps, rng);
      const auto quad = filter_same(msg, hilbert_taps(32));
      for (std::size_t n = 0; n < len; ++n) set(out, n, {msg[n], quad[n]});
      normalize_power(out, guard);
      return out;
    }
    case Modulation::kWBFM: {
      const auto msg = analog_message(len, sps, rng);
      double phase = 0;
      for (std::size_t n = 0; n < len; ++n) {
        phase += 2 * kPi * 0.05 * msg[n];
        set(out, n, std::polar(1.0, phase));
      }
      return out;
    }
    default:
      break;
  }

  const auto pts = constellation(scheme);
  const auto h = rrc_taps(prm.rolloff, prm.span, sps);
  const std::size_t delay = h.size() / 2;
  for (std::size_t n = 0; n < len; ++n) {
    std::complex<double> acc = 0;
    // Symbol k sits at sample k*sps; tap index is n - k*sps + delay.
    const std::size_t k_lo = n + delay >= h.size() ? (n + delay - (h.size() - 1) + sps - 1) / sps : 0;
    const std::size_t k_hi = std::min(symbols.size() - 1, (n + delay) / sps);
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      acc += h[n + delay - k * sps] * pts[static_cast<std::size_t>(symbols[k])];
    }
    set(out, n, acc);
  }
  normalize_power(out, guard);
  return out;
}

void ChannelParams::validate() const {
  if (!(std::abs(cfo) < 0.5)) throw ConfigError("channel: |cfo| must be below 0.5 cycles/sample");
  if (!(clock_offset_frac >= 0.0 && clock_offset_frac < 1.0)) {
    throw ConfigError("channel: clock offset must lie in [0, 1)");
  }
  if (!std::isfinite(phase0) || !std::isfinite(clock_rate_ppm) || std::abs(clock_rate_ppm) >= 1e5) {
    throw ConfigError("channel: invalid phase or clock rate");
  }
}

Tensor<double> impair(const Tensor<double>& signal, const ChannelParams& p) {
  require_signal(signal, "impair");
  p.validate();
  const std::size_t len = signal.extent(1);
  constexpr std::ptrdiff_t kHalf = 16;
  const double rate = 1.0 + p.clock_rate_ppm * 1e-6;
  Tensor<double> out({2, len});
  for (std::size_t n = 0; n < len; ++n) {
    const double pos = static_cast<double>(n) * rate + p.clock_offset_frac;
    const auto base = static_cast<std::ptrdiff_t>(std::floor(pos));
    std::complex<double> acc = 0;
    for (std::ptrdiff_t k = base - kHalf + 1; k <= base + kHalf; ++k) {
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(len)) continue;
      const double d = pos - static_cast<double>(k);
      if (std::abs(d) >= kHalf) continue;
      double w;
      if (d == 0.0) {
        w = 1.0;
      } else {
        const double sinc = std::sin(kPi * d) / (kPi * d);
        const double x = kPi * d / kHalf;
        w = sinc * (0.42 + 0.5 * std::cos(x) + 0.08 * std::cos(2 * x));
      }
      acc += w * at(signal, static_cast<std::size_t>(k));
    }
    const double phi = 2 * kPi * p.cfo * static_cast<double>(n) + p.phase0;
    set(out, n, acc * std::complex<double>(std::cos(phi), std::sin(phi)));
  }
  return out;
}

double mean_power(const Tensor<double>& signal) {
  require_signal(signal, "mean_power");
  const std::size_t len = signal.extent(1);
  double p = 0;
  for (std::size_t n = 0; n < len; ++n) p += std::norm(at(signal, n));
  return p / static_cast<double>(len);
}

Tensor<double> add_awgn(const Tensor<double>& signal, double snr_db, Rng& rng) {
  require_signal(signal, "add_awgn");
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  if (std::isnan(snr_db)) throw InputError("add_awgn: SNR is NaN");
  const double p = mean_power(signal);
  if (!(p > 0)) throw NumericError("add_awgn: signal has zero power");
  const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0) / 2.0);
  Tensor<double> out = signal;
  for (auto& v : out.data()) v += sigma * rng.normal();
  return out;
}

// ------------------------------------------------------------------ Dataset

DatasetConfig DatasetConfig::full() {
  DatasetConfig cfg;
  cfg.modulations.assign(std::begin(kAllModulations), std::end(kAllModulations));
  for (int s = -20; s <= 18; s += 2) cfg.snrs_db.push_back(s);
  cfg.frames_per_pair = 1000;
  return cfg;
}

void DatasetConfig::validate() const {
  if (modulations.empty()) throw ConfigError("dataset config: no modulations");
  if (snrs_db.empty()) throw ConfigError("dataset config: no SNR grid");
  if (frames_per_pair == 0) throw ConfigError("dataset config: frames per pair must be positive");
  if (modulations.size() > 255) throw ConfigError("dataset config: too many classes");
  for (std::size_t i = 0; i < modulations.size(); ++i) {
    for (std::size_t j = i + 1; j < modulations.size(); ++j) {
      if (modulations[i] == modulations[j]) throw ConfigError("dataset config: duplicate modulation");
    }
  }
  for (int s : snrs_db) {
    if (s < -128 || s > 127) throw ConfigError("dataset config: SNR must fit in a signed byte");
  }
  if (modulator.sps < 2) throw ConfigError("dataset config: sps must be at least 2");
  if (!(modulator.rolloff > 0 && modulator.rolloff <= 1)) throw ConfigError("dataset config: bad roll-off");
  if (!(impairments.max_cfo >= 0 && impairments.max_cfo < 0.5)) throw ConfigError("dataset config: bad CFO range");
  if (!(impairments.max_clock_ppm >= 0 && impairments.max_clock_ppm < 1e5)) {
    throw ConfigError("dataset config: bad clock rate range");
  }
}

std::uint64_t DatasetConfig::hash() const {
  std::uint64_t h = Rng::derive(seed, {frames_per_pair, modulator.sps, modulator.span,
                                       std::bit_cast<std::uint64_t>(modulator.rolloff),
                                       std::bit_cast<std::uint64_t>(modulator.fsk_index),
                                       std::bit_cast<std::uint64_t>(modulator.gfsk_bt),
                                       modulator.gfsk_span, impairments.enabled ? 1u : 0u,
                                       std::bit_cast<std::uint64_t>(impairments.max_cfo),
                                       std::bit_cast<std::uint64_t>(impairments.max_clock_ppm)});
  for (Modulation m : modulations) h = Rng::derive(h, {0x11, static_cast<std::uint64_t>(m)});
  for (int s : snrs_db) h = Rng::derive(h, {0x22, static_cast<std::uint64_t>(static_cast<std::int64_t>(s))});
  return h;
}

FrameParts generate_frame_parts(const DatasetConfig& cfg, std::size_t mod_index, int snr_db,
                                std::size_t index) {
  const Modulation mod = cfg.modulations.at(mod_index);
  const auto& prm = cfg.modulator;
  Rng rng(Rng::derive(cfg.seed, {static_cast<std::uint64_t>(mod),
                                 static_cast<std::uint64_t>(static_cast<std::int64_t>(snr_db)),
                                 static_cast<std::uint64_t>(index)}));

  // Guard bands on both sides of the crop window absorb filter transients
  // and the few samples the clock drift can consume.
  const std::size_t guard = prm.span * prm.sps;
  const std::size_t drift_margin = 32;
  const std::size_t needed = kFrameLength + 2 * guard + drift_margin;
  const std::size_t nsym = (needed + prm.sps - 1) / prm.sps + 1;
  std::vector<int> symbols(nsym);
  const std::size_t alphabet = alphabet_size(mod);
  for (auto& s : symbols) s = static_cast<int>(rng.uniform_int(alphabet));
  Tensor<double> sig = modulate(mod, symbols, prm, rng);

  if (cfg.impairments.enabled) {
    ChannelParams ch;
    ch.cfo = rng.uniform(-cfg.impairments.max_cfo, cfg.impairments.max_cfo);
    ch.phase0 = rng.uniform(0.0, 2 * kPi);
    ch.clock_rate_ppm = rng.uniform(-cfg.impairments.max_clock_ppm, cfg.impairments.max_clock_ppm);
    ch.clock_offset_frac = rng.uniform();
    sig = impair(sig, ch);
  }

  const std::size_t len = sig.extent(1);
  const std::size_t last_start = len - guard - kFrameLength - drift_margin / 2;
  const std::size_t start = guard + static_cast<std::size_t>(rng.uniform_int(last_start - guard + 1));
  Tensor<double> crop({2, kFrameLength});
  for (std::size_t n = 0; n < kFrameLength; ++n) set(crop, n, at(sig, start + n));
  auto noisy = add_awgn(crop, static_cast<double>(snr_db), rng);
  return {std::move(crop), std::move(noisy)};
}

IQFrame generate_frame(const DatasetConfig& cfg, std::size_t mod_index, int snr_db, std::size_t index) {
  const auto parts = generate_frame_parts(cfg, mod_index, snr_db, index);
  IQFrame frame;
  for (std::size_t i = 0; i < parts.noisy.size(); ++i) frame.samples[i] = static_cast<float>(parts.noisy[i]);
  frame.label = static_cast<std::uint8_t>(mod_index);
  frame.snr_db = static_cast<std::int8_t>(snr_db);
  return frame;
}

IQDataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  IQDataset ds;
  for (Modulation m : cfg.modulations) ds.class_names.emplace_back(modulation_name(m));
  ds.frames.reserve(cfg.modulations.size() * cfg.snrs_db.size() * cfg.frames_per_pair);
  for (std::size_t mi = 0; mi < cfg.modulations.size(); ++mi) {
    for (int snr : cfg.snrs_db) {
      for (std::size_t i = 0; i < cfg.frames_per_pair; ++i) ds.frames.push_back(generate_frame(cfg, mi, snr, i));
    }
  }
  ds.provenance = cfg.hash();
  return ds;
}

std::pair<IQDataset, IQDataset> split_shuffle(const IQDataset& ds, double ratio, std::uint64_t seed) {
  if (ds.empty()) throw InputError("split_shuffle: empty dataset");
  if (!(ratio > 0 && ratio < 1)) throw InputError("split_shuffle: ratio must lie in (0, 1)");
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ds.size())));
  IQDataset train;
  IQDataset test;
  train.class_names = test.class_names = ds.class_names;
  train.provenance = Rng::derive(ds.provenance, {seed, 0});
  test.provenance = Rng::derive(ds.provenance, {seed, 1});
  train.frames.reserve(cut);
  test.frames.reserve(ds.size() - cut);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? train : test).frames.push_back(ds.frames[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

// -------------------------------------------------------------- File format

namespace {
constexpr char kDatasetMagic[] = "CXIQ";
constexpr std::uint16_t kDatasetVersion = 1;
}  // namespace

std::uint32_t save_dataset(const IQDataset& ds, const std::filesystem::path& path) {
  if (ds.num_classes() == 0 || ds.num_classes() > 255) throw InputError("save_dataset: bad class table");
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kDatasetMagic, 4));
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint16_t>(ds.num_classes()));
  for (const auto& name : ds.class_names) w.put_string16(name);
  w.put(static_cast<std::uint32_t>(ds.size()));
  for (const auto& f : ds.frames) {
    if (f.label >= ds.num_classes()) throw InputError("save_dataset: frame label outside class table");
    w.put(f.label);
    w.put(f.snr_db);
    for (float v : f.samples) w.put(v);
  }
  const auto crc = w.put_crc();
  w.write_file(path);
  return crc;
}

IQDataset load_dataset(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path, "dataset file");
  if (r.remaining() < 4 || r.get_bytes(4) != std::string_view(kDatasetMagic, 4)) r.fail("bad magic");
  IQDataset ds;
  ds.provenance = r.verify_crc();
  if (r.get<std::uint16_t>() != kDatasetVersion) r.fail("unsupported version");
  const auto classes = r.get<std::uint16_t>();
  if (classes == 0) r.fail("empty class table");
  for (std::uint16_t i = 0; i < classes; ++i) ds.class_names.push_back(r.get_string16());
  const auto count = r.get<std::uint32_t>();
  constexpr std::size_t kFrameBytes = 2 + 4 * 2 * kFrameLength;
  if (r.remaining() != static_cast<std::size_t>(count) * kFrameBytes) r.fail("frame table size mismatch");
  ds.frames.resize(count);
  for (auto& f : ds.frames) {
    f.label = r.get<std::uint8_t>();
    f.snr_db = r.get<std::int8_t>();
    if (f.label >= classes) r.fail("frame label outside class table");
    for (auto& v : f.samples) v = r.get<float>();
  }
  return ds;
}

std::string dataset_format_description() {
  std::ostringstream os;
  os << "IQ dataset file format, version " << kDatasetVersion << " (all integers little-endian)\n"
     << "  magic        4 bytes   ASCII \"CXIQ\"\n"
     << "  version      u16       " << kDatasetVersion << "\n"
     << "  num_classes  u16       K >= 1\n"
     << "  class table  K entries u16 byte length + UTF-8 name; index = label\n"
     << "  frame_count  u32       N\n"
     << "  frames       N entries:\n"
     << "    label      u8        class index < K\n"
     << "    snr_db     i8        SNR in dB\n"
     << "    samples    256 x f32 IEEE-754 little-endian; 128 I values then 128 Q values\n"
     << "  crc32        u32       CRC-32 (zlib polynomial) of every preceding byte\n";
  return os.str();
}

template <typename T>
Tensor<T> make_batch(const IQDataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("make_batch: no frames selected");
  constexpr std::size_t kPer = 2 * kFrameLength;
  Tensor<T> batch({indices.size(), 1, 2, kFrameLength});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& f = ds.frames.at(indices[b]);
    T* dst = batch.raw() + b * kPer;
    for (std::size_t i = 0; i < kPer; ++i) dst[i] = static_cast<T>(f.samples[i]);
  }
  return batch;
}

template Tensor<float> make_batch(const IQDataset&, std::span<const std::size_t>);
template Tensor<double> make_batch(const IQDataset&, std::span<const std::size_t>);

}  // namespace iqnet
