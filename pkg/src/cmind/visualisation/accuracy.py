"""Bar chart of localization accuracy per model.

Draws the correct/incorrect split of each evaluation report as a stacked
horizontal bar, the picture form of the per-model results table.

"""
import matplotlib.pyplot as plt
import numpy as np


def plot_localization_accuracy(reports, ax=None, colors=('#2a7f62', '#c8553d')):
    '''Plot correct and incorrect localizations per model.

    Parameters
    ----------
    reports : list of EvalReport
        Reports from :func:`~cmind.evaluation.run_corpus`, one bar each.
    ax : matplotlib.axes.Axes
        Matplotlib axes object where the plot will be drawn on. If ax=None,
        a new axes will be generated.
    colors : tuple of str
        Colours of the correct and incorrect segments.

    Returns
    -------
    matplotlib.axes.Axes
        An axes with one stacked bar per model, labelled with the accuracy.

    '''
    labels = [r.model_label for r in reports]
    correct = np.array([r.correct for r in reports])
    incorrect = np.array([r.incorrect for r in reports])
    if ax is None:
        fig, ax = plt.subplots(figsize=(6, 1 + 0.6 * len(reports)))

    y = np.arange(len(reports))
    ax.barh(y, correct, color=colors[0], label='Correct')
    ax.barh(y, incorrect, left=correct, color=colors[1], label='Incorrect')
    for k, report in enumerate(reports):
        if report.total:
            ax.annotate('{:.0%}'.format(report.accuracy), xy=(report.total, k),
                        xytext=(4, 0), textcoords='offset points', va='center', ha='left')

    ax.set_yticks(y)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel('Number of reports')
    ax.set_xlim(0, max([r.total for r in reports] + [1]) * 1.15)
    ax.legend(loc='lower right', frameon=False)
    return ax
