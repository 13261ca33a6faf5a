from .periodic_filter import PeriodicFilter, progress_logger
from .parallel import get_threads, ordered_map, set_threads
