from .common import *
from .laughlin import *
from .optical import *
from .qubit import *
