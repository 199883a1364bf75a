"""
Relative pessimism for offline reinforcement learning on finite MDPs.

For full documentation see <https://armorlab.readthedocs.io>

Exact evaluation of policies on tabular MDPs and the simulation bound::

    help(armorlab.mdp_core)

Offline datasets and behavior distributions::

    help(armorlab.offline_data)

Model losses, version spaces and concentrability::

    help(armorlab.version_space)

The relative-pessimism game and its pure and mixed solvers::

    help(armorlab.maximin)

Fixed points of relative pessimism::

    help(armorlab.fixed_point)

Numerical checks of the improvement and suboptimality guarantees::

    help(armorlab.theory_checks)

Instances, configuration and sweeps::

    help(armorlab.experiments)
"""
__version__ = '0.1.0'
__author__ = 'armorlab developers'
__email__ = 'armorlab@users.noreply.github.com'
__copyright__ = '2026, armorlab developers'
__license__ = 'MIT'
__url__ = 'https://github.com/armorlab/armorlab'

from .mdp_core import *
from .offline_data import *
from .version_space import *
from .maximin import *
from .fixed_point import *
from .theory_checks import *
from .experiments import *
