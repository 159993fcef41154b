#pragma once

// Piecewise-constant control pulses.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdc {

struct PulseWaveform {
  std::vector<double> samples;  // field value per interval, internal units
  double dt = 0.0;              // interval length, internal time
  double duration = 0.0;        // total duration T

  int n_intervals() const { return static_cast<int>(samples.size()); }

  double value_at(double t) const {
    if (samples.empty()) return 0.0;
    int i = static_cast<int>(std::floor(t / dt));
    if (i < 0) i = 0;
    if (i >= n_intervals()) i = n_intervals() - 1;
    return samples[i];
  }

  // Interval start time.
  double t_start(int i) const { return i * dt; }
  double t_end(int i) const { return (i + 1 == n_intervals()) ? duration : (i + 1) * dt; }

  double energy_integral() const {  // int eps^2 dt
    double s = 0.0;
    for (int i = 0; i < n_intervals(); ++i) s += samples[i] * samples[i] * (t_end(i) - t_start(i));
    return s;
  }

  PulseWaveform reversed() const {
    PulseWaveform p = *this;
    for (int i = 0; i < n_intervals(); ++i) p.samples[i] = samples[n_intervals() - 1 - i];
    return p;
  }

  static PulseWaveform zero(double T, double dt) {
    PulseWaveform p;
    p.dt = dt;
    p.duration = T;
    p.samples.assign(static_cast<size_t>(std::ceil(T / dt - 1e-12)), 0.0);
    return p;
  }

  // amplitude * sin^2(pi t / T) * cos(omega t), sampled at interval midpoints.
  static PulseWaveform sin2_carrier(double amplitude, double omega, double T, double dt) {
    PulseWaveform p = zero(T, dt);
    for (int i = 0; i < p.n_intervals(); ++i) {
      const double t = 0.5 * (p.t_start(i) + p.t_end(i));
      const double env = std::sin(M_PI * t / T);
      p.samples[i] = amplitude * env * env * std::cos(omega * t);
    }
    return p;
  }

  static PulseWaveform constant(double amplitude, double T, double dt) {
    PulseWaveform p = zero(T, dt);
    for (auto& s : p.samples) s = amplitude;
    return p;
  }
};

// Two-column text format: time field, one row per interval start.
inline void write_pulse(const std::string& path, const PulseWaveform& p,
                        double time_scale = 1.0, double field_scale = 1.0) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_pulse: cannot open " + path);
  f << "# time field\n";
  f.precision(15);
  for (int i = 0; i < p.n_intervals(); ++i)
    f << p.t_start(i) * time_scale << " " << p.samples[i] * field_scale << "\n";
}

inline PulseWaveform read_pulse(const std::string& path, double duration) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_pulse: cannot open " + path);
  PulseWaveform p;
  std::string line;
  std::vector<double> times;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, v;
    if (ss >> t >> v) {
      times.push_back(t);
      p.samples.push_back(v);
    }
  }
  if (p.samples.size() < 2) throw std::runtime_error("read_pulse: too few samples");
  p.dt = times[1] - times[0];
  p.duration = duration > 0 ? duration : times.back() + p.dt;
  return p;
}

}  // namespace qdc
