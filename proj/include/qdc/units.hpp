#pragma once

// Material parameters and the internal unit system.
//
// All internal quantities are expressed in effective atomic units of the
// material: energies in Ha* = (m*/eps_r^2) Ha, lengths in a0* = (eps_r/m*) a0,
// hbar = m* = e = 1.  Only the interface layer converts to/from physical
// units (meV, nm, ps, V/m, T).

#include <cmath>
#include <stdexcept>
#include <string>

namespace qdc {

// Physical constants used for the conversions.
inline constexpr double kBohrRadiusNm = 0.0529177;     // nm
inline constexpr double kHartreeMeV = 27211.4;         // meV
inline constexpr double kHbarMeVps = 0.6582119569;     // meV*ps
inline constexpr double kHbarSI = 1.054571817e-34;     // J*s
inline constexpr double kElectronChargeSI = 1.602176634e-19;  // C
inline constexpr double kBohrMagnetonMeVperT = 5.7883818060e-2;  // meV/T

struct MaterialParams {
  double m_star = 1.0;       // effective mass ratio m*/m_e
  double eps_r = 1.0;        // relative permittivity
  double g_star = 2.0;       // effective g-factor
  double hbar_omega = 1.0;   // confinement energy [meV]
  double d = 0.0;            // interdot separation [nm]

  void validate() const {
    if (!(m_star > 0.0)) throw std::invalid_argument("MaterialParams: m_star must be > 0");
    if (!(eps_r >= 1.0)) throw std::invalid_argument("MaterialParams: eps_r must be >= 1");
    if (!(hbar_omega > 0.0)) throw std::invalid_argument("MaterialParams: hbar_omega must be > 0");
    if (!(d >= 0.0)) throw std::invalid_argument("MaterialParams: d must be >= 0");
  }

  // Gyromagnetic ratio is always derived from g_star, never stored.
  // gamma_e * B * s gives the Zeeman energy; with spin in units of hbar the
  // energy scale is g* mu_B B.
  double zeeman_energy_mev_per_tesla() const { return g_star * kBohrMagnetonMeVperT; }

  static MaterialParams gaas() {
    return MaterialParams{0.067, 12.4, -0.44, 1.0, 130.0};
  }

  static MaterialParams preset(const std::string& name) {
    if (name == "gaas") return gaas();
    throw std::invalid_argument("unknown material preset: " + name);
  }
};

// Conversion factors between internal units and physical units.
// physical = internal * unit;  internal = physical / unit.
struct UnitSystem {
  double length_unit;  // nm per internal length
  double energy_unit;  // meV per internal energy
  double time_unit;    // ps per internal time
  double efield_unit;  // V/m per internal field
  double bfield_unit;  // T per internal field

  double to_internal_length(double nm) const { return nm / length_unit; }
  double to_physical_length(double x) const { return x * length_unit; }
  double to_internal_energy(double mev) const { return mev / energy_unit; }
  double to_physical_energy(double e) const { return e * energy_unit; }
  double to_internal_time(double ps) const { return ps / time_unit; }
  double to_physical_time(double t) const { return t * time_unit; }
  double to_internal_efield(double v_per_m) const { return v_per_m / efield_unit; }
  double to_physical_efield(double f) const { return f * efield_unit; }
  double to_internal_bfield(double tesla) const { return tesla / bfield_unit; }
  double to_physical_bfield(double b) const { return b * bfield_unit; }

  // Angular frequency: internal energy <-> 1e12 rad/s (written "THz" in
  // outputs, following the convention omega = dE/hbar).
  double to_physical_angular_thz(double e_internal) const {
    return e_internal * energy_unit / kHbarMeVps;  // rad/ps == 1e12 rad/s
  }
};

// Effective atomic units for the given material.
inline UnitSystem effective_units(const MaterialParams& p) {
  p.validate();
  UnitSystem u{};
  u.length_unit = p.eps_r / p.m_star * kBohrRadiusNm;
  u.energy_unit = p.m_star / (p.eps_r * p.eps_r) * kHartreeMeV;
  u.time_unit = kHbarMeVps / u.energy_unit;
  // field unit: energy over (e * length)
  u.efield_unit = (u.energy_unit * 1e-3) / (u.length_unit * 1e-9);  // V/m
  // field unit for B: hbar / (e * a0*^2)
  const double l_m = u.length_unit * 1e-9;
  u.bfield_unit = kHbarSI / (kElectronChargeSI * l_m * l_m);
  return u;
}

// Dimensionless model parameters in internal units.
struct InternalParams {
  double omega;       // confinement frequency (= hbar*omega / Ha*)
  double d;           // interdot separation in a0*
  double osc_length;  // 1/sqrt(omega): oscillator length in a0*
  double zeeman_per_tesla;  // spin Zeeman energy per Tesla, internal units
};

inline InternalParams internal_params(const MaterialParams& p, const UnitSystem& u) {
  InternalParams ip{};
  ip.omega = p.hbar_omega / u.energy_unit;
  ip.d = p.d / u.length_unit;
  ip.osc_length = 1.0 / std::sqrt(ip.omega);
  ip.zeeman_per_tesla = p.zeeman_energy_mev_per_tesla() / u.energy_unit;
  return ip;
}

}  // namespace qdc
