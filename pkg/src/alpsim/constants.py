"""Physical constants and fixed unit conversions (SI throughout)."""

# Universal gas constant [J/(mol K)]
GAS_CONSTANT = 8.314462618

# Boltzmann constant [J/K], used by Arrhenius rate laws
BOLTZMANN = 1.380649e-23

# Standard reference conditions defining "standard" in sccm
STANDARD_PRESSURE = 101325.0  # [Pa]
STANDARD_TEMPERATURE = 273.15  # [K]

# 1 sccm = 1e-6 m^3/min at standard conditions
SCCM_TO_M3S = 1.0e-6 / 60.0

# Areal mass conversions: internal state is kg/m^2, QCM reports ng/cm^2.
# 1 g/m^2 = 1e5 ng/cm^2; 1 kg/m^2 = 1e3 g/m^2.
KG_M2_TO_G_M2 = 1.0e3
G_M2_TO_NG_CM2 = 1.0e5
KG_M2_TO_NG_CM2 = KG_M2_TO_G_M2 * G_M2_TO_NG_CM2

# Sensor sampling cadence [s]
SAMPLE_INTERVAL = 0.1
