"""Figure rendering for adhesion1d run outputs.

Consumes only the solver's documented CSV contract (profile.csv and
kymograph.csv in a run directory); never modifies its inputs.
"""

__version__ = "0.1.0"

from .dispersion import bifurcation_alpha_uniform, growth_rate_uniform, plot_dispersion
from .figures import FigureSpec, load_figure_spec, plot_panels
from .reader import Kymograph, MalformedDataError, Profile, read_kymograph, read_profile
