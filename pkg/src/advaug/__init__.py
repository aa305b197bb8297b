"""Adversarial data augmentation and teacher-student training for small classifiers."""
