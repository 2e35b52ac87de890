"""
Transonic flow in a two-dimensional de Laval nozzle in the potential plane: a degenerate elliptic
solver upstream of the sonic line, a characteristic marching solver downstream, their connection,
and diagnostics of the sonic curve.
"""

from . __version__ import __version__

from . assembly import (connect,
                        reconstruct_theta,
                        to_physical)
from . config import (RunConfig,
                      config_from_dict,
                      load_config)
from . gasmodel import (GasModel,
                        gas_model)
from . nozzle import (NozzleSpec,
                      build_maps,
                      default_wall,
                      straight_channel,
                      validate)
from . sonic_analysis import classify_sonic_points
