from .accuracy import plot_localization_accuracy
