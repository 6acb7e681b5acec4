"""Physical constants shared across the simulator."""

EARTH_RADIUS_M = 6_371_000.0      # spherical Earth model
MU_EARTH = 3.986004418e14         # gravitational parameter, m^3/s^2
SPEED_OF_LIGHT = 2.998e8          # m/s
BOLTZMANN = 1.380649e-23          # J/K
