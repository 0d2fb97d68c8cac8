def chunks(obj, size):
    """
    Splits a list into sized chunks, the last one possibly shorter.

    Parameters
    ----------
    obj : list
        List to split up.
    size : int
        Size of chunks to split list into.
    """
    if size < 1:
        raise ValueError('chunk size must be positive, got {}'.format(size))

    for i in range(0, len(obj), size):
        yield obj[i:i + size]


def median(values):
    ordered = sorted(values)
    if not ordered:
        raise ValueError('median of an empty sequence')

    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0
