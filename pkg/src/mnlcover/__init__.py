"""Assortment optimization under the multinomial logit model with covering constraints."""
