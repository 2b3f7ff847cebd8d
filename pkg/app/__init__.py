"""
Drift MLE - maximum likelihood estimation of the drift of X_t = theta*t + B_t
"""
